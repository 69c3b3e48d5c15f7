#pragma once

#include "simo/engine.hpp"
#include "simo/spec_model.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace simo {

/// Trailing fraction of the run treated as steady state.
inline constexpr double kDefaultWindow = 0.2;

struct RippleResult {
    double value = 0.0;  // max - min over the window
    double mean = 0.0;   // time-weighted mean over the window
    /// False when the mean is more than 10% away from the target; unset without a spec.
    std::optional<bool> regulated;
};

/// First sample index inside the trailing `window` fraction of the trace.
[[nodiscard]] std::size_t window_start(const Trace& trace, double window);

[[nodiscard]] RippleResult ripple(const Trace& trace, std::size_t j, double window = kDefaultWindow);

[[nodiscard]] double peak_current(const Trace& trace);

/// Loss-ledger efficiency Σe_out / (Σe_out + losses); nullopt when no input energy.
[[nodiscard]] std::optional<double> efficiency(const EnergyLedger& ledger);

/// Σe_out / (e_in + e_drive); sensitive to stored-energy changes on short windows.
[[nodiscard]] std::optional<double> input_efficiency(const EnergyLedger& ledger);

/// Ledger accrued over the trailing `window` of the run, starting at the
/// latest checkpoint at or before the window start.
[[nodiscard]] EnergyLedger window_ledger(const SimulationResult& result,
                                         double window = kDefaultWindow);

struct TrackingReport {
    double max_deviation = 0.0;  // max |v_boot_top - v_out[sel] - v_boot| over Deliver samples
    double max_excess = 0.0;     // max (deviation - i_l * 2 * r_on), <= 0 when the bound holds
    bool bound_holds = true;     // per-sample bound, allowing rounding of the stored values
    double droop = 0.0;          // max |v_boot - V_C| over Deliver samples
    double idle_top_error = 0.0; // max |v_boot_top - V_C| over Idle samples
    std::size_t deliver_samples = 0;
    std::size_t idle_samples = 0;
};

[[nodiscard]] TrackingReport verify_tracking(const Trace& trace, const ConverterSpec& spec);

/// Gate-source voltage of the conducting pair at each Deliver sample.
[[nodiscard]] std::vector<double> gate_overdrive_series(const Trace& trace,
                                                        const ConverterSpec& spec);

struct GateDriveCost {
    std::size_t n = 0;
    struct Count {
        std::size_t caps = 0;
        std::size_t pads = 0;
    };
    Count conventional;
    Count proposed;
    std::size_t pads_saved = 0;
    double offchip_cap_ratio = 0.0;
};

/// Off-chip bootstrap capacitors and pads: one capacitor and two pads per
/// output conventionally, versus a single shared capacitor on one pad.
/// Throws std::invalid_argument for n == 0.
[[nodiscard]] GateDriveCost gate_drive_cost(std::size_t n);

struct Metrics {
    std::vector<RippleResult> outputs;
    double i_l_peak = 0.0;
    std::optional<double> efficiency;
    std::optional<double> input_efficiency;
    std::optional<EnergyLedger> losses;  // window ledger, when energy data exists
    std::optional<TrackingReport> tracking;
    std::vector<double> service_rate;  // Deliver slots per second per output, over the window
    double window = kDefaultWindow;
};

[[nodiscard]] Metrics compute_metrics(const Trace& trace, double window = kDefaultWindow);
[[nodiscard]] Metrics compute_metrics(const SimulationResult& result,
                                      double window = kDefaultWindow);

}  // namespace simo
