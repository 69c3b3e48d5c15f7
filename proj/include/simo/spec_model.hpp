#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace simo {

// All quantities are SI: volts, amps, seconds, henries, farads, ohms.

/// Ideal-offset diode: open below v_f, v_f + i*r_s once conducting.
struct DiodeModel {
    double v_f = 0.0;
    double r_s = 0.0;
};

struct SwitchModel {
    double r_on = 0.0;
    bool blocks_reverse = false;
};

/// Constant-current sink above v_floor, resistive (R = v_floor / i_load) below it.
struct LoadModel {
    double i_load = 0.0;
    double v_floor = 0.1;

    [[nodiscard]] double current(double v_out) const noexcept {
        if (v_out >= v_floor) return i_load;
        return i_load * v_out / v_floor;
    }
};

struct InductorSpec {
    double l = 0.0;
    double r_series = 0.0;
};

struct BootstrapSpec {
    double c_boot = 0.0;
    double v_drive = 0.0;   // rail that recharges C_boot through D_B
    DiodeModel d_b;
    double r_charge = 0.0;
};

struct OutputSpec {
    double target = 0.0;
    double c_out = 0.0;
    LoadModel load;
    double r_on_each = 0.0;  // per device; the back-to-back pair conducts with 2 * r_on_each
    double c_gate = 0.0;
    DiodeModel d_j;
    double hysteresis = 0.0;
    double v_th = 1.0;       // minimum gate overdrive that enhances the switch pair
};

enum class Arbitration { RoundRobin, Priority };

struct ControllerParams {
    double i_pk = 0.0;
    double t_on_max = 0.0;
    double t_deliver_max = 0.0;
    std::size_t start_index = 0;
    Arbitration arbitration = Arbitration::RoundRobin;
};

/// Bias network of the high-side p-type driver: R1/R2 divider with a
/// four-transistor diode clamp across R1.
struct DriverSpec {
    double r1 = 100e3;
    double r2 = 100e3;
    double v_gs_unit = 0.7;
};

struct SimSettings {
    double dt = 1e-9;
    double t_end = 0.0;
    std::size_t sample_every = 1;
};

struct ConverterSpec {
    double v_in = 0.0;
    InductorSpec inductor;
    BootstrapSpec bootstrap;
    SwitchModel switch_sp;
    SwitchModel switch_sy;
    std::vector<OutputSpec> outputs;
    ControllerParams controller;
    DriverSpec driver;
    SimSettings sim;

    [[nodiscard]] std::size_t n_outputs() const noexcept { return outputs.size(); }
};

struct Violation {
    std::string path;     // e.g. "outputs[2].c_out" (outputs are numbered from 1)
    std::string message;

    bool operator==(const Violation&) const = default;
};

/// Every invariant violation in `spec`; an empty list means the spec is valid.
/// Never throws for malformed numeric content (NaN, inf, negatives).
[[nodiscard]] std::vector<Violation> validate(const ConverterSpec& spec);

/// Steady recharge target of the bootstrap capacitor, V_C = v_drive - v_f(D_B).
[[nodiscard]] double nominal_boot_voltage(const ConverterSpec& spec) noexcept;

/// Index of the output with the highest regulation target (first one on ties).
[[nodiscard]] std::size_t highest_target_output(const ConverterSpec& spec) noexcept;

}  // namespace simo
