#pragma once

#include "poscert/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace poscert {

enum class NormKind { L1, L2, Linf };

inline const char* to_string(NormKind k) {
    switch (k) {
        case NormKind::L1: return "L1";
        case NormKind::L2: return "L2";
        case NormKind::Linf: return "Linf";
    }
    return "?";
}

/// A single real coordinate (a compartment total such as S or a predator count).
struct ScalarComponent {
    std::string label;
};

/// Cell-centered grid of cell-averaged densities. `widths` are cell measures
/// (lengths in 1D, areas in 2D), so the L1 norm is the total mass.
struct GridComponent {
    std::string label;
    std::vector<double> widths;
    NormKind norm = NormKind::L1;
};

using Component = std::variant<ScalarComponent, GridComponent>;

/// Discrete Banach lattice: an ordered product of scalar and grid components.
/// The product norm is the sum of the component norms.
class SpaceSpec {
public:
    SpaceSpec() = default;

    explicit SpaceSpec(std::vector<Component> components) : components_(std::move(components)) {
        offsets_.reserve(components_.size() + 1);
        offsets_.push_back(0);
        for (const auto& c : components_) {
            std::size_t n = 1;
            if (const auto* g = std::get_if<GridComponent>(&c)) {
                if (g->widths.empty()) throw StructuralError("grid component '" + g->label + "' has no cells");
                for (double w : g->widths) {
                    if (!(w > 0.0) || !std::isfinite(w))
                        throw StructuralError("grid component '" + g->label + "' has a non-positive cell width");
                }
                n = g->widths.size();
            }
            offsets_.push_back(offsets_.back() + n);
        }
    }

    static Component scalar(std::string label) { return ScalarComponent{std::move(label)}; }

    static Component grid(std::string label, std::size_t cells, double width, NormKind kind = NormKind::L1) {
        return GridComponent{std::move(label), std::vector<double>(cells, width), kind};
    }

    static Component grid(std::string label, std::vector<double> widths, NormKind kind = NormKind::L1) {
        return GridComponent{std::move(label), std::move(widths), kind};
    }

    std::size_t dof() const { return offsets_.empty() ? 0 : offsets_.back(); }
    std::size_t component_count() const { return components_.size(); }
    const Component& component(std::size_t i) const { return components_.at(i); }
    const std::vector<Component>& components() const { return components_; }
    std::size_t offset(std::size_t i) const { return offsets_.at(i); }
    std::size_t size(std::size_t i) const { return offsets_.at(i + 1) - offsets_.at(i); }

    bool is_scalar(std::size_t i) const { return std::holds_alternative<ScalarComponent>(components_.at(i)); }

    const std::string& label(std::size_t i) const {
        return std::visit([](const auto& c) -> const std::string& { return c.label; }, components_.at(i));
    }

    /// Per-coordinate weight: 1 for scalars, the cell width for grid cells.
    std::vector<double> weights() const {
        std::vector<double> w;
        w.reserve(dof());
        for (const auto& c : components_) {
            if (const auto* g = std::get_if<GridComponent>(&c))
                w.insert(w.end(), g->widths.begin(), g->widths.end());
            else
                w.push_back(1.0);
        }
        return w;
    }

    /// Which component owns flat index `k`.
    std::size_t component_of(std::size_t k) const {
        auto it = std::upper_bound(offsets_.begin(), offsets_.end(), k);
        return static_cast<std::size_t>(it - offsets_.begin()) - 1;
    }

    /// Column labels: "S" for a scalar, "I[0]", "I[1]", ... for grid cells.
    std::vector<std::string> coordinate_labels() const {
        std::vector<std::string> out;
        out.reserve(dof());
        for (std::size_t i = 0; i < components_.size(); ++i) {
            if (is_scalar(i)) {
                out.push_back(label(i));
            } else {
                for (std::size_t j = 0; j < size(i); ++j) out.push_back(label(i) + "[" + std::to_string(j) + "]");
            }
        }
        return out;
    }

private:
    std::vector<Component> components_;
    std::vector<std::size_t> offsets_;
};

using StateVector = std::vector<double>;

inline void require_match(const SpaceSpec& space, std::span<const double> v) {
    if (v.size() != space.dof())
        throw StructuralError("state has " + std::to_string(v.size()) + " entries, space has " +
                              std::to_string(space.dof()) + " degrees of freedom");
}

inline void require_finite(std::span<const double> v, const char* what = "state") {
    for (double x : v)
        if (!std::isfinite(x)) throw StructuralError(std::string(what) + " contains a non-finite entry");
}

inline double component_norm(const SpaceSpec& space, std::span<const double> v, std::size_t i) {
    const auto part = v.subspan(space.offset(i), space.size(i));
    if (space.is_scalar(i)) return std::abs(part[0]);
    const auto& g = std::get<GridComponent>(space.component(i));
    switch (g.norm) {
        case NormKind::L1: {
            double s = 0.0;
            for (std::size_t j = 0; j < part.size(); ++j) s += g.widths[j] * std::abs(part[j]);
            return s;
        }
        case NormKind::L2: {
            double s = 0.0;
            for (std::size_t j = 0; j < part.size(); ++j) s += g.widths[j] * part[j] * part[j];
            return std::sqrt(s);
        }
        case NormKind::Linf: {
            double s = 0.0;
            for (double x : part) s = std::max(s, std::abs(x));
            return s;
        }
    }
    return 0.0;
}

inline double norm(const SpaceSpec& space, std::span<const double> v) {
    require_match(space, v);
    double s = 0.0;
    for (std::size_t i = 0; i < space.component_count(); ++i) s += component_norm(space, v, i);
    return s;
}

inline StateVector lattice_sup(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw StructuralError("lattice_sup: dimension mismatch");
    StateVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = std::max(x[k], y[k]);
    return out;
}

inline StateVector lattice_abs(std::span<const double> v) {
    StateVector neg(v.size());
    std::transform(v.begin(), v.end(), neg.begin(), [](double x) { return -x; });
    return lattice_sup(v, neg);
}

struct MinComponent {
    double value = 0.0;
    std::size_t index = 0;
};

/// Smallest entry and its (first) position. Empty input yields {0, 0}.
inline MinComponent min_component(std::span<const double> v) {
    if (v.empty()) return {};
    auto it = std::min_element(v.begin(), v.end());
    return {*it, static_cast<std::size_t>(it - v.begin())};
}

/// Absolute cone tolerance tau = 1e-12 * (1 + ||v||).
inline double cone_tolerance(const SpaceSpec& space, std::span<const double> v, double rel = 1e-12) {
    return rel * (1.0 + norm(space, v));
}

inline bool in_cone(const SpaceSpec& space, std::span<const double> v, double rel = 1e-12) {
    return min_component(v).value >= -cone_tolerance(space, v, rel);
}

// Small vector helpers shared by the production path.
namespace vec {

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t k = 0; k < x.size(); ++k) y[k] += a * x[k];
}

inline StateVector sub(std::span<const double> x, std::span<const double> y) {
    StateVector out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] - y[k];
    return out;
}

inline double max_abs(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

inline double sum_abs(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

}  // namespace vec

}  // namespace poscert
