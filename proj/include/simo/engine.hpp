#pragma once

#include "simo/controller.hpp"
#include "simo/dynamics.hpp"
#include "simo/spec_model.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace simo {

enum class EventKind {
    PhaseChange,
    CurrentZero,     // inductor current reached zero and was clamped there
    PeakCurrent,     // i_l reached i_pk during Charge
    OnTimeLimit,     // Charge ended by t_on_max
    ComparatorTrip,  // v_out crossed a comparator threshold
    DeliverTimeout,  // warning: t_deliver_max expired with current still flowing
    Underdrive,      // violation: pair could not be enhanced, D_j carried the current
};

[[nodiscard]] const char* to_string(EventKind kind) noexcept;

struct TraceEvent {
    double t = 0.0;
    EventKind kind = EventKind::PhaseChange;
    int output = -1;
    std::string detail;
};

struct Sample {
    double t = 0.0;
    double i_l = 0.0;
    double v_l_plus = 0.0;
    double v_boot_top = 0.0;
    double v_boot = 0.0;
    char phase = 'I';
    int selected = -1;
};

/// Time-ordered samples plus the event log of one run.
class Trace {
public:
    Trace() = default;
    explicit Trace(std::size_t n_outputs) : n_outputs_(n_outputs) {}

    std::optional<ConverterSpec> spec;

    [[nodiscard]] std::size_t n_outputs() const noexcept { return n_outputs_; }
    [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
    [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }

    [[nodiscard]] const Sample& sample(std::size_t i) const { return samples_.at(i); }
    [[nodiscard]] const std::vector<Sample>& samples() const noexcept { return samples_; }
    [[nodiscard]] std::span<const double> v_out(std::size_t i) const {
        return {v_out_.data() + i * n_outputs_, n_outputs_};
    }
    [[nodiscard]] double v_out(std::size_t i, std::size_t j) const {
        return v_out_.at(i * n_outputs_ + j);
    }

    /// Appends a sample; throws std::invalid_argument unless t is strictly increasing.
    void append(const Sample& s, std::span<const double> v_out);

    std::vector<TraceEvent> events;

    bool operator==(const Trace& other) const;

private:
    std::size_t n_outputs_ = 0;
    std::vector<Sample> samples_;
    std::vector<double> v_out_;
};

/// Cumulative energies in joules. For ledgers produced by subtraction,
/// every field is the amount accrued over the interval and e_stored is the change.
struct EnergyLedger {
    double e_in = 0.0;     // from v_in while S_p is closed
    double e_drive = 0.0;  // from the gate-drive rail that recharges C_boot
    std::vector<double> e_out;
    double e_cond = 0.0;
    double e_diode = 0.0;
    double e_gate = 0.0;
    double e_boot_recharge = 0.0;
    double e_stored = 0.0;

    [[nodiscard]] double total_input() const noexcept { return e_in + e_drive; }
    [[nodiscard]] double total_output() const noexcept;
    [[nodiscard]] double total_losses() const noexcept {
        return e_cond + e_diode + e_gate + e_boot_recharge;
    }
    /// total_input - (outputs + losses + stored). Meaningful on interval ledgers.
    [[nodiscard]] double balance_residual() const noexcept {
        return total_input() - (total_output() + total_losses() + e_stored);
    }

    friend EnergyLedger operator-(const EnergyLedger& end, const EnergyLedger& start);
};

struct LedgerCheckpoint {
    double t = 0.0;
    EnergyLedger ledger;
};

struct SimulationResult {
    Trace trace;
    EnergyLedger ledger;  // cumulative since t = 0; e_stored is the final stored energy
    std::vector<LedgerCheckpoint> checkpoints;  // t = 0 then every 5% of t_end
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// One fixed RK4 step of the phase held in `state`. Events are not checked.
/// Throws SimulationError if the result is not finite.
[[nodiscard]] CircuitState step(const CircuitState& state, const ConverterSpec& spec, double dt);

/// Bisects a sign change of `f` over [t0, t1] (negative vs non-negative) and
/// returns the earliest bracket end lying on f(t1)'s side, to
/// |f| <= 1e-12 * scale or 40 halvings. Throws std::invalid_argument when
/// f(t0) and f(t1) are on the same side.
[[nodiscard]] double locate_event(const std::function<double(double)>& f, double t0, double t1,
                                  double scale = 0.0);

/// Cold start at t = 0 (outputs and current at zero, C_boot at V_C) to sim.t_end.
/// Throws std::invalid_argument for an invalid spec and SimulationError on a
/// non-finite state.
[[nodiscard]] SimulationResult simulate(const ConverterSpec& spec);

}  // namespace simo
