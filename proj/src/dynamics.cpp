#include "simo/dynamics.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace simo {

char Phase::tag() const noexcept {
    switch (kind) {
        case PhaseKind::Charge: return 'C';
        case PhaseKind::Deliver: return 'D';
        case PhaseKind::Idle: return 'I';
    }
    return '?';
}

namespace {

const OutputSpec& delivered_output(const Phase& phase, const ConverterSpec& spec) {
    // An out-of-range index is a programming error, not a runtime condition.
    assert(phase.output < spec.outputs.size());
    return spec.outputs[phase.output];
}

}  // namespace

double loop_resistance(const Phase& phase, const ConverterSpec& spec) {
    const double r_sp = spec.switch_sp.r_on;
    const double r_l = spec.inductor.r_series;
    switch (phase.kind) {
        case PhaseKind::Charge:
            return r_sp + spec.switch_sy.r_on + r_l;
        case PhaseKind::Deliver: {
            // The low-side freewheel leg is sized like S_p.
            const auto& o = delivered_output(phase, spec);
            const double r_out = phase.switch_enhanced ? 2.0 * o.r_on_each : o.d_j.r_s;
            return r_sp + r_l + r_out;
        }
        case PhaseKind::Idle:
            return 0.0;
    }
    return 0.0;
}

double recharge_current(double v_boot, const ConverterSpec& spec) noexcept {
    const auto& bs = spec.bootstrap;
    const double r = bs.r_charge + bs.d_b.r_s;
    return std::max(0.0, (bs.v_drive - bs.d_b.v_f - v_boot) / r);
}

void derivative_into(const Phase& phase, std::span<const double> y, const ConverterSpec& spec,
                     std::span<double> dy) {
    const std::size_t n = spec.outputs.size();
    assert(y.size() == n + kStateOutputs && dy.size() == y.size());

    const double i_l = y[kStateCurrent];
    const double v_boot = y[kStateBoot];
    const double l = spec.inductor.l;

    for (std::size_t j = 0; j < n; ++j) {
        const auto& o = spec.outputs[j];
        const double v = y[kStateOutputs + j];
        dy[kStateOutputs + j] = -o.load.current(v) / o.c_out;
    }

    switch (phase.kind) {
        case PhaseKind::Charge:
            dy[kStateCurrent] = (spec.v_in - i_l * loop_resistance(phase, spec)) / l;
            dy[kStateBoot] = recharge_current(v_boot, spec) / spec.bootstrap.c_boot;
            break;
        case PhaseKind::Deliver: {
            const auto& o = delivered_output(phase, spec);
            const double v = y[kStateOutputs + phase.output];
            const double source = phase.input_connected ? spec.v_in : 0.0;
            const double offset = phase.switch_enhanced ? 0.0 : o.d_j.v_f;
            dy[kStateCurrent] = (source - v - offset - i_l * loop_resistance(phase, spec)) / l;
            dy[kStateOutputs + phase.output] += i_l / o.c_out;
            dy[kStateBoot] = 0.0;  // no gate leakage
            break;
        }
        case PhaseKind::Idle:
            dy[kStateCurrent] = 0.0;
            dy[kStateBoot] = recharge_current(v_boot, spec) / spec.bootstrap.c_boot;
            break;
    }
}

namespace {

std::vector<double> flatten(const CircuitState& s) {
    std::vector<double> y(kStateOutputs + s.v_out.size());
    y[kStateCurrent] = s.i_l;
    y[kStateBoot] = s.v_boot;
    std::copy(s.v_out.begin(), s.v_out.end(), y.begin() + kStateOutputs);
    return y;
}

}  // namespace

StateDerivative derivative(const CircuitState& state, const ConverterSpec& spec) {
    const auto y = flatten(state);
    std::vector<double> dy(y.size());
    derivative_into(state.phase, y, spec, dy);
    return {dy[kStateCurrent], dy[kStateBoot],
            std::vector<double>(dy.begin() + kStateOutputs, dy.end())};
}

NodeVoltages node_voltages(const Phase& phase, double i_l, double v_boot,
                           std::span<const double> v_out, const ConverterSpec& spec) {
    NodeVoltages nv;
    switch (phase.kind) {
        case PhaseKind::Charge:
            nv.v_l_plus = i_l * spec.switch_sy.r_on;
            break;
        case PhaseKind::Idle:
            nv.v_l_plus = 0.0;
            break;
        case PhaseKind::Deliver: {
            const auto& o = delivered_output(phase, spec);
            const double v = v_out[phase.output];
            if (phase.switch_enhanced) {
                nv.v_l_plus = v + i_l * 2.0 * o.r_on_each;
                nv.v_s = v + i_l * o.r_on_each;
            } else {
                nv.v_l_plus = v + o.d_j.v_f + i_l * o.d_j.r_s;
                nv.v_s = v;
            }
            break;
        }
    }
    nv.v_boot_top = nv.v_l_plus + v_boot;
    if (phase.is_deliver()) {
        nv.v_gate_sel = phase.switch_enhanced ? nv.v_boot_top : *nv.v_s;
    }
    return nv;
}

NodeVoltages node_voltages(const CircuitState& state, const ConverterSpec& spec) {
    return node_voltages(state.phase, state.i_l, state.v_boot, state.v_out, spec);
}

double gate_overdrive(const CircuitState& state, const ConverterSpec& spec, std::size_t j) {
    if (!state.phase.is_deliver() || state.phase.output != j) {
        throw std::invalid_argument("gate_overdrive: state is not delivering to output " +
                                    std::to_string(j + 1));
    }
    // v_gate - v_s from node_voltages, written without v_out so no rounding depends on it.
    if (!state.phase.switch_enhanced) return 0.0;
    return state.v_boot + state.i_l * spec.outputs.at(j).r_on_each;
}

double driver_bias(double v_boot_top, const DriverSpec& drv) noexcept {
    const double divided = v_boot_top * drv.r1 / (drv.r1 + drv.r2);
    return std::min(divided, 4.0 * drv.v_gs_unit);
}

double analytic_rl_segment(double i0, double v_eff, double r_tot, double l, double t) noexcept {
    if (r_tot == 0.0) return i0 + v_eff * t / l;
    // expm1 keeps the small r_tot * t / l limit accurate.
    const double i_inf = v_eff / r_tot;
    return i0 - (i_inf - i0) * std::expm1(-r_tot * t / l);
}

std::optional<double> analytic_rl_crossing(double i0, double v_eff, double r_tot, double l,
                                           double i_target) noexcept {
    if (r_tot == 0.0) {
        if (v_eff == 0.0) return std::nullopt;
        const double t = (i_target - i0) * l / v_eff;
        return t >= 0.0 ? std::optional(t) : std::nullopt;
    }
    const double i_inf = v_eff / r_tot;
    const double frac = (i_target - i0) / (i_inf - i0);
    if (!(frac >= 0.0 && frac < 1.0)) return std::nullopt;
    return -l / r_tot * std::log1p(-frac);
}

void power_flows_into(const Phase& phase, std::span<const double> y, const ConverterSpec& spec,
                      PowerFlows& out) {
    const std::size_t n = spec.outputs.size();
    const double i_l = y[kStateCurrent];
    out.p_out.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double v = y[kStateOutputs + j];
        out.p_out[j] = v * spec.outputs[j].load.current(v);
    }

    out.p_in = 0.0;
    out.p_drive = 0.0;
    out.p_cond = 0.0;
    out.p_diode = 0.0;
    out.p_recharge = 0.0;

    if (!phase.is_deliver()) {
        const auto& bs = spec.bootstrap;
        const double i_r = recharge_current(y[kStateBoot], spec);
        out.p_drive = bs.v_drive * i_r;
        out.p_recharge = i_r * bs.d_b.v_f + i_r * i_r * (bs.r_charge + bs.d_b.r_s);
    }

    switch (phase.kind) {
        case PhaseKind::Charge:
            out.p_in = spec.v_in * i_l;
            out.p_cond = i_l * i_l * loop_resistance(phase, spec);
            break;
        case PhaseKind::Deliver: {
            const auto& o = delivered_output(phase, spec);
            if (phase.input_connected) out.p_in = spec.v_in * i_l;
            if (phase.switch_enhanced) {
                out.p_cond = i_l * i_l * loop_resistance(phase, spec);
            } else {
                const double r_path = loop_resistance(phase, spec) - o.d_j.r_s;
                out.p_cond = i_l * i_l * r_path;
                out.p_diode = i_l * o.d_j.v_f + i_l * i_l * o.d_j.r_s;
            }
            break;
        }
        case PhaseKind::Idle:
            break;
    }
}

double stored_energy(std::span<const double> y, const ConverterSpec& spec) {
    const double i_l = y[kStateCurrent];
    const double v_boot = y[kStateBoot];
    double e = 0.5 * spec.inductor.l * i_l * i_l + 0.5 * spec.bootstrap.c_boot * v_boot * v_boot;
    for (std::size_t j = 0; j < spec.outputs.size(); ++j) {
        const double v = y[kStateOutputs + j];
        e += 0.5 * spec.outputs[j].c_out * v * v;
    }
    return e;
}

}  // namespace simo
