#pragma once

#include "poscert/certify.hpp"
#include "poscert/error.hpp"
#include "poscert/semigroup.hpp"
#include "poscert/solver.hpp"

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>

namespace poscert::io {

using Json = nlohmann::ordered_json;

// JSON has no infinities; they are written as strings so nothing is lost silently.
inline Json number(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}

template <class T>
Json optional_number(const std::optional<T>& x) {
    return x ? number(static_cast<double>(*x)) : Json(nullptr);
}

inline Json to_json(const Violation& v) {
    Json j;
    j["component"] = v.component;
    j["value"] = number(v.value);
    j["time"] = number(v.time);
    Json state = Json::array();
    for (double x : v.state) state.push_back(number(x));
    j["state"] = std::move(state);
    return j;
}

inline Json to_json(const GrowthBound& g) {
    return Json{{"M", number(g.M)}, {"omega", number(g.omega)}, {"sampled", g.sampled}, {"method", g.method}};
}

inline Json to_json(const CertificationReport& r) {
    Json j;
    j["m"] = number(r.m);
    j["certified"] = r.certified;
    j["lambda"] = number(r.lambda_hat);
    j["lambda_sampled"] = number(r.lambda_sampled);
    j["lambda_analytic"] = optional_number(r.lambda_analytic);
    j["k"] = number(r.k_hat);
    j["k_sampled"] = number(r.k_sampled);
    j["k_analytic"] = optional_number(r.k_analytic);
    j["samples_used"] = r.samples_used;
    j["worst_violation"] = r.worst_violation ? to_json(*r.worst_violation) : Json(nullptr);
    j["notes"] = r.notes;
    return j;
}

inline Json to_json(const WindowResult& w) {
    Json j;
    j["t_start"] = number(w.t_start);
    j["t_len"] = number(w.t_len);
    j["iterations"] = w.iterations;
    j["residual"] = number(w.residual);
    j["m"] = number(w.m);
    j["lambda"] = number(w.lambda_m);
    j["k"] = number(w.k_m);
    j["contraction_bound"] = number(w.contraction_bound);
    Json ratios = Json::array();
    for (double r : w.contraction_ratios) ratios.push_back(number(r));
    j["contraction_ratios"] = std::move(ratios);
    j["min_component"] = number(w.min_component);
    j["shift_retries"] = w.shift_retries;
    return j;
}

/// Run metadata: everything in the trajectory except the states.
inline Json trajectory_metadata(const CauchyProblem& p, const Trajectory& tr, bool include_windows = true) {
    Json j;
    j["model"] = p.name;
    j["dof"] = p.space.dof();
    j["growth_bound"] = to_json(p.growth);
    j["horizon_reached"] = tr.times.empty() ? Json(nullptr) : number(tr.times.back());
    j["rows"] = tr.times.size();
    j["window_count"] = tr.windows.size();
    Json mc;
    mc["value"] = number(tr.min_component_overall);
    mc["time"] = number(tr.min_component_time);
    mc["index"] = tr.min_component_index;
    mc["label"] = tr.min_component_index < p.space.dof() ? p.space.coordinate_labels()[tr.min_component_index] : "";
    j["min_component"] = std::move(mc);
    if (tr.blow_up) {
        j["blow_up"] = Json{{"time_estimate", number(tr.blow_up->time_estimate)},
                            {"final_norm", number(tr.blow_up->final_norm)},
                            {"reason", tr.blow_up->reason}};
    } else {
        j["blow_up"] = nullptr;
    }
    double lambda_max = 0.0, k_max = 0.0;
    for (const auto& w : tr.windows) {
        lambda_max = std::max(lambda_max, w.lambda_m);
        k_max = std::max(k_max, w.k_m);
    }
    j["lambda_max"] = number(lambda_max);
    j["k_max"] = number(k_max);
    Json certs = Json::array();
    for (const auto& c : tr.certifications) certs.push_back(to_json(c));
    j["certifications"] = std::move(certs);
    if (include_windows) {
        Json ws = Json::array();
        for (const auto& w : tr.windows) ws.push_back(to_json(w));
        j["windows"] = std::move(ws);
    }
    j["notes"] = p.notes;
    return j;
}

/// Structured form of a library error, for the machine-read report.
inline Json error_json(const std::exception& e) {
    Json j;
    if (const auto* pe = dynamic_cast<const Error*>(&e)) {
        j["kind"] = pe->kind();
    } else {
        j["kind"] = "internal";
    }
    j["message"] = e.what();
    if (const auto* pe = dynamic_cast<const ParameterError*>(&e)) j["constraint"] = pe->constraint();
    if (const auto* ce = dynamic_cast<const CertificationFailure*>(&e)) j["violation"] = to_json(ce->violation());
    if (const auto* me = dynamic_cast<const CertificationMismatch*>(&e)) {
        j["component"] = me->component();
        j["value"] = number(me->value());
        j["required_shift"] = number(me->required_shift());
    }
    if (const auto* ie = dynamic_cast<const IterationFailure*>(&e)) j["last_residual"] = number(ie->last_residual());
    return j;
}

}  // namespace poscert::io
