#pragma once

#include "simo/spec_model.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace simo {

enum class PhaseKind : std::uint8_t { Charge, Deliver, Idle };

/// Operating phase of the converter.
///
/// Charge: S_p and S_y closed, the inductor ramps from v_in while C_boot
/// recharges through D_B. Deliver(j): S_y open, the output pair j conducts and
/// the bootstrap bottom plate rides on V_L+. Idle: S_y closed, no current.
///
/// A Deliver phase also records how the slot is wired:
///  - input_connected: S_p closed (boost path). When false the inductor's input
///    terminal is freewheeled to ground through the low-side leg (buck path).
///  - switch_enhanced: the pair j is driven on. When false the current flows
///    through the freewheel diode D_j instead.
struct Phase {
    PhaseKind kind = PhaseKind::Idle;
    std::size_t output = 0;
    bool input_connected = true;
    bool switch_enhanced = true;

    static Phase charge() noexcept { return {PhaseKind::Charge, 0, true, true}; }
    static Phase idle() noexcept { return {PhaseKind::Idle, 0, false, false}; }
    static Phase deliver(std::size_t j, bool input_connected = true,
                         bool switch_enhanced = true) noexcept {
        return {PhaseKind::Deliver, j, input_connected, switch_enhanced};
    }

    [[nodiscard]] bool is_charge() const noexcept { return kind == PhaseKind::Charge; }
    [[nodiscard]] bool is_deliver() const noexcept { return kind == PhaseKind::Deliver; }
    [[nodiscard]] bool is_idle() const noexcept { return kind == PhaseKind::Idle; }

    /// Single-letter tag used in trace files: C, D or I.
    [[nodiscard]] char tag() const noexcept;
    /// Output index in Deliver, -1 otherwise.
    [[nodiscard]] int selected() const noexcept {
        return is_deliver() ? static_cast<int>(output) : -1;
    }

    bool operator==(const Phase&) const = default;
};

struct CircuitState {
    double t = 0.0;
    double i_l = 0.0;
    double v_boot = 0.0;  // across C_boot, top minus bottom plate
    std::vector<double> v_out;
    Phase phase;
};

struct StateDerivative {
    double di_l = 0.0;
    double dv_boot = 0.0;
    std::vector<double> dv_out;
};

struct NodeVoltages {
    double v_l_plus = 0.0;    // switch node, also the bootstrap bottom plate
    double v_boot_top = 0.0;  // always v_l_plus + v_boot
    std::optional<double> v_s;  // source node of the selected pair, Deliver only
    double v_gate_sel = 0.0;  // gate of the selected pair (0 outside Deliver)
};

// Flat state layout shared with the integrator: y = [i_l, v_boot, v_out...].
inline constexpr std::size_t kStateCurrent = 0;
inline constexpr std::size_t kStateBoot = 1;
inline constexpr std::size_t kStateOutputs = 2;

/// Total series resistance of the inductor loop in `phase`.
[[nodiscard]] double loop_resistance(const Phase& phase, const ConverterSpec& spec);

/// Current into C_boot through r_charge and D_B; never negative.
[[nodiscard]] double recharge_current(double v_boot, const ConverterSpec& spec) noexcept;

/// Writes d/dt of the flat state `y` into `dy` (same size, N + 2).
void derivative_into(const Phase& phase, std::span<const double> y, const ConverterSpec& spec,
                     std::span<double> dy);

[[nodiscard]] StateDerivative derivative(const CircuitState& state, const ConverterSpec& spec);

[[nodiscard]] NodeVoltages node_voltages(const Phase& phase, double i_l, double v_boot,
                                         std::span<const double> v_out,
                                         const ConverterSpec& spec);
[[nodiscard]] NodeVoltages node_voltages(const CircuitState& state, const ConverterSpec& spec);

/// Gate-source voltage of the conducting pair j: v_boot + i_l * r_on_each
/// when the pair is enhanced, 0 when delivery goes through D_j.
/// Throws std::invalid_argument unless state.phase is Deliver(j).
[[nodiscard]] double gate_overdrive(const CircuitState& state, const ConverterSpec& spec,
                                    std::size_t j);

/// V_SG of the p-type driver: min(v_boot_top * r1 / (r1 + r2), 4 * v_gs_unit).
[[nodiscard]] double driver_bias(double v_boot_top, const DriverSpec& drv) noexcept;

/// Closed-form current of a series R-L loop driven by a constant v_eff.
[[nodiscard]] double analytic_rl_segment(double i0, double v_eff, double r_tot, double l,
                                         double t) noexcept;

/// Time for the closed-form segment to reach i_target, or nullopt if it never does.
[[nodiscard]] std::optional<double> analytic_rl_crossing(double i0, double v_eff, double r_tot,
                                                         double l, double i_target) noexcept;

/// Power terms of the energy ledger at one instant, in watts.
struct PowerFlows {
    double p_in = 0.0;        // v_in * i_l while S_p is closed
    double p_drive = 0.0;     // v_drive * recharge current
    double p_cond = 0.0;      // i^2 R in the inductor loop
    double p_diode = 0.0;     // D_j conduction
    double p_recharge = 0.0;  // D_B and r_charge dissipation
    std::vector<double> p_out;  // v_out[j] * i_load[j]
};

void power_flows_into(const Phase& phase, std::span<const double> y, const ConverterSpec& spec,
                      PowerFlows& out);

/// 1/2 L i^2 + sum 1/2 C v^2 (outputs and C_boot).
[[nodiscard]] double stored_energy(std::span<const double> y, const ConverterSpec& spec);

}  // namespace simo
