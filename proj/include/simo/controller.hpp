#pragma once

#include "simo/dynamics.hpp"
#include "simo/spec_model.hpp"

#include <cstddef>
#include <vector>

namespace simo {

/// Peak-current PFM controller state.
///
/// `pending` is the output whose request started the current cycle. During a
/// residual redirect the inductor is steered into `mode.output` (the
/// highest-target output) while `pending` still names the output that was served.
struct ControllerState {
    Phase mode;
    std::size_t rr_index = 0;
    double t_phase_start = 0.0;
    std::size_t pending = 0;
    bool residual = false;

    bool operator==(const ControllerState&) const = default;
};

struct Action {
    Phase phase;
    ControllerState ctrl;
};

[[nodiscard]] ControllerState initial_controller(const ConverterSpec& spec) noexcept;

/// Hysteretic comparator: v_out[j] < target_j - hysteresis_j.
[[nodiscard]] bool needs_service(const CircuitState& state, const ConverterSpec& spec,
                                 std::size_t j);

/// Gate overdrive that output j would see if its pair turned on now
/// (i_l * r_on adds on top once current flows) is at least its threshold.
[[nodiscard]] bool delivery_enabled(double v_boot, const ConverterSpec& spec, std::size_t j);

/// Wiring of a Deliver(j) slot that starts in `state`. S_p stays closed only
/// while the output sits at or above v_in, so di/dt <= 0 for the whole slot.
[[nodiscard]] Phase plan_delivery(const CircuitState& state, const ConverterSpec& spec,
                                  std::size_t j);

/// Transition function, evaluated at phase boundaries. Returns the current
/// phase and an unchanged controller state when no boundary condition holds,
/// so callers can iterate it to a fixed point.
[[nodiscard]] Action next_action(const ControllerState& ctrl, const CircuitState& state,
                                 const ConverterSpec& spec);

/// Switches closed in `phase`: S_p, S_y and one flag per output pair.
struct SwitchVector {
    bool s_p = false;
    bool s_y = false;
    std::vector<bool> s_out;

    /// Number of closed switches among {S_y, S_out_0..N-1}.
    [[nodiscard]] std::size_t exclusive_closed() const;
};

[[nodiscard]] SwitchVector implied_switches(const Phase& phase, std::size_t n_outputs);

}  // namespace simo
