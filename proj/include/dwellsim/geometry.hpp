#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "dwellsim/types.hpp"

namespace dwellsim {

/// Closed ball in a subspace of the state: the set of states whose
/// `position_dims` components lie within `radius` of `center`. Components not
/// listed in `position_dims` are unconstrained.
class FeedbackRegion {
public:
    static constexpr double kBoundaryTolerance = 1e-9;

    FeedbackRegion(StateVec center, double radius, std::vector<Index> position_dims)
        : center_(std::move(center)), radius_(radius), dims_(std::move(position_dims)) {
        if (!(radius_ > 0.0) || !std::isfinite(radius_)) throw ConfigError("must be > 0", "region.radius");
        if (dims_.empty()) throw ConfigError("must be non-empty", "region.position_dims");
        auto sorted = dims_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw ConfigError("duplicate index", "region.position_dims");
        }
        if (sorted.front() < 0) throw ConfigError("negative index", "region.position_dims");
        if (center_.size() != static_cast<Index>(dims_.size())) {
            throw ConfigError("center must have one entry per position dimension", "region.center");
        }
        if (!center_.allFinite()) throw ConfigError("non-finite", "region.center");
    }

    [[nodiscard]] const StateVec& center() const noexcept { return center_; }
    [[nodiscard]] double radius() const noexcept { return radius_; }
    [[nodiscard]] const std::vector<Index>& position_dims() const noexcept { return dims_; }

    /// Position components of `state` (in `position_dims` order).
    [[nodiscard]] StateVec position(const StateVec& state) const {
        check_dim(state);
        StateVec p(static_cast<Index>(dims_.size()));
        for (std::size_t k = 0; k < dims_.size(); ++k) p[static_cast<Index>(k)] = state[dims_[k]];
        return p;
    }

    [[nodiscard]] double signed_distance(const StateVec& state) const {
        return (position(state) - center_).norm() - radius_;
    }

    /// Closed set: the boundary counts as inside.
    [[nodiscard]] bool contains(const StateVec& state) const { return signed_distance(state) <= 0.0; }

    /// Radially scales the position components onto the boundary; the other
    /// components are returned unchanged.
    [[nodiscard]] StateVec project_to_boundary(const StateVec& state) const {
        const StateVec offset = position(state) - center_;
        const double dist = offset.norm();
        if (dist == 0.0) throw DegenerateInput("projection of the region center onto the boundary is undefined");
        StateVec out = state;
        scatter(out, center_ + offset * (radius_ / dist));
        return out;
    }

    /// Unit vector (full state dimension) pointing from a boundary point to
    /// the center; zero outside `position_dims`.
    [[nodiscard]] StateVec inward_normal(const StateVec& boundary_point) const {
        const double sd = signed_distance(boundary_point);
        if (std::abs(sd) > kBoundaryTolerance) {
            throw ContractViolation("inward_normal: point is " + std::to_string(sd) + " m off the boundary");
        }
        const StateVec dir = center_ - position(boundary_point);
        StateVec out = StateVec::Zero(boundary_point.size());
        scatter(out, dir / dir.norm());
        return out;
    }

    /// Writes `pos` into the position components of `state`.
    void scatter(StateVec& state, const StateVec& pos) const {
        for (std::size_t k = 0; k < dims_.size(); ++k) state[dims_[k]] = pos[static_cast<Index>(k)];
    }

    /// Largest position index + 1; states must have at least this many components.
    [[nodiscard]] Index min_state_dim() const noexcept {
        return *std::max_element(dims_.begin(), dims_.end()) + 1;
    }

private:
    void check_dim(const StateVec& state) const {
        if (state.size() < min_state_dim()) {
            throw ConfigError("state dimension " + std::to_string(state.size()) +
                              " does not cover region.position_dims");
        }
    }

    StateVec center_;
    double radius_;
    std::vector<Index> dims_;
};

}  // namespace dwellsim
