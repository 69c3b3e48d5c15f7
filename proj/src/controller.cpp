#include "simo/controller.hpp"

#include <algorithm>

namespace simo {

ControllerState initial_controller(const ConverterSpec& spec) noexcept {
    ControllerState c;
    c.mode = Phase::idle();
    c.rr_index = spec.outputs.empty() ? 0 : spec.controller.start_index % spec.outputs.size();
    return c;
}

bool needs_service(const CircuitState& state, const ConverterSpec& spec, std::size_t j) {
    const auto& o = spec.outputs.at(j);
    return state.v_out.at(j) < o.target - o.hysteresis;
}

bool delivery_enabled(double v_boot, const ConverterSpec& spec, std::size_t j) {
    return v_boot >= spec.outputs.at(j).v_th;
}

Phase plan_delivery(const CircuitState& state, const ConverterSpec& spec, std::size_t j) {
    const bool boost = state.v_out.at(j) >= spec.v_in;
    return Phase::deliver(j, boost, delivery_enabled(state.v_boot, spec, j));
}

namespace {

Action arbitrate(ControllerState ctrl, const CircuitState& state, const ConverterSpec& spec) {
    const std::size_t n = spec.outputs.size();
    const std::size_t first =
        spec.controller.arbitration == Arbitration::Priority ? 0 : ctrl.rr_index;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = (first + k) % n;
        if (needs_service(state, spec, j)) {
            ctrl.mode = Phase::charge();
            ctrl.pending = j;
            ctrl.residual = false;
            ctrl.t_phase_start = state.t;
            return {ctrl.mode, ctrl};
        }
    }
    if (!ctrl.mode.is_idle()) {
        ctrl.mode = Phase::idle();
        ctrl.residual = false;
        ctrl.t_phase_start = state.t;
    }
    return {ctrl.mode, ctrl};
}

}  // namespace

Action next_action(const ControllerState& ctrl, const CircuitState& state,
                   const ConverterSpec& spec) {
    const auto& cp = spec.controller;
    switch (ctrl.mode.kind) {
        case PhaseKind::Idle:
            return arbitrate(ctrl, state, spec);

        case PhaseKind::Charge: {
            const bool at_peak = state.i_l >= cp.i_pk;
            const bool timed_out = state.t >= ctrl.t_phase_start + cp.t_on_max;
            if (!at_peak && !timed_out) return {ctrl.mode, ctrl};
            ControllerState next = ctrl;
            next.mode = plan_delivery(state, spec, ctrl.pending);
            next.t_phase_start = state.t;
            return {next.mode, next};
        }

        case PhaseKind::Deliver: {
            if (state.i_l <= 0.0) {
                ControllerState next = ctrl;
                next.rr_index = (ctrl.pending + 1) % spec.outputs.size();
                next.residual = false;
                return arbitrate(next, state, spec);
            }
            if (ctrl.residual) return {ctrl.mode, ctrl};

            const std::size_t j = ctrl.mode.output;
            const auto& o = spec.outputs[j];
            const bool tripped = state.v_out[j] >= o.target + o.hysteresis;
            const bool timed_out = state.t >= ctrl.t_phase_start + cp.t_deliver_max;
            if (!tripped && !timed_out) return {ctrl.mode, ctrl};

            // Current is still flowing: steer it into the highest-target output.
            ControllerState next = ctrl;
            next.residual = true;
            next.t_phase_start = state.t;
            const std::size_t k = highest_target_output(spec);
            if (k != j) next.mode = plan_delivery(state, spec, k);
            return {next.mode, next};
        }
    }
    return {ctrl.mode, ctrl};
}

std::size_t SwitchVector::exclusive_closed() const {
    return static_cast<std::size_t>(s_y) +
           static_cast<std::size_t>(std::count(s_out.begin(), s_out.end(), true));
}

SwitchVector implied_switches(const Phase& phase, std::size_t n_outputs) {
    SwitchVector sv;
    sv.s_out.assign(n_outputs, false);
    switch (phase.kind) {
        case PhaseKind::Charge:
            sv.s_p = true;
            sv.s_y = true;
            break;
        case PhaseKind::Deliver:
            sv.s_p = phase.input_connected;
            if (phase.switch_enhanced && phase.output < n_outputs) sv.s_out[phase.output] = true;
            break;
        case PhaseKind::Idle:
            sv.s_y = true;
            break;
    }
    return sv;
}

}  // namespace simo
