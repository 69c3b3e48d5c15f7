#include "simo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace simo {

const char* to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::PhaseChange: return "phase_change";
        case EventKind::CurrentZero: return "current_zero";
        case EventKind::PeakCurrent: return "peak_current";
        case EventKind::OnTimeLimit: return "on_time_limit";
        case EventKind::ComparatorTrip: return "comparator_trip";
        case EventKind::DeliverTimeout: return "deliver_timeout";
        case EventKind::Underdrive: return "underdrive";
    }
    return "unknown";
}

void Trace::append(const Sample& s, std::span<const double> v_out) {
    if (v_out.size() != n_outputs_) {
        throw std::invalid_argument("Trace::append: expected " + std::to_string(n_outputs_) +
                                    " output voltages");
    }
    if (!samples_.empty() && !(s.t > samples_.back().t)) {
        throw std::invalid_argument("Trace::append: sample times must strictly increase");
    }
    samples_.push_back(s);
    v_out_.insert(v_out_.end(), v_out.begin(), v_out.end());
}

bool Trace::operator==(const Trace& other) const {
    auto same_sample = [](const Sample& a, const Sample& b) {
        return a.t == b.t && a.i_l == b.i_l && a.v_l_plus == b.v_l_plus &&
               a.v_boot_top == b.v_boot_top && a.v_boot == b.v_boot && a.phase == b.phase &&
               a.selected == b.selected;
    };
    auto same_event = [](const TraceEvent& a, const TraceEvent& b) {
        return a.t == b.t && a.kind == b.kind && a.output == b.output && a.detail == b.detail;
    };
    return n_outputs_ == other.n_outputs_ &&
           std::equal(samples_.begin(), samples_.end(), other.samples_.begin(),
                      other.samples_.end(), same_sample) &&
           v_out_ == other.v_out_ &&
           std::equal(events.begin(), events.end(), other.events.begin(), other.events.end(),
                      same_event);
}

double EnergyLedger::total_output() const noexcept {
    return std::accumulate(e_out.begin(), e_out.end(), 0.0);
}

EnergyLedger operator-(const EnergyLedger& end, const EnergyLedger& start) {
    EnergyLedger d;
    d.e_in = end.e_in - start.e_in;
    d.e_drive = end.e_drive - start.e_drive;
    d.e_cond = end.e_cond - start.e_cond;
    d.e_diode = end.e_diode - start.e_diode;
    d.e_gate = end.e_gate - start.e_gate;
    d.e_boot_recharge = end.e_boot_recharge - start.e_boot_recharge;
    d.e_stored = end.e_stored - start.e_stored;
    d.e_out.resize(end.e_out.size());
    for (std::size_t j = 0; j < d.e_out.size(); ++j) {
        d.e_out[j] = end.e_out[j] - (j < start.e_out.size() ? start.e_out[j] : 0.0);
    }
    return d;
}

namespace {

/// Classical RK4 over the flat state with reusable scratch buffers.
class Integrator {
public:
    explicit Integrator(const ConverterSpec& spec)
        : spec_(spec),
          k1_(dim()), k2_(dim()), k3_(dim()), k4_(dim()), tmp_(dim()) {}

    [[nodiscard]] std::size_t dim() const noexcept {
        return spec_.outputs.size() + kStateOutputs;
    }

    void advance(const Phase& phase, std::span<const double> y0, double h, std::span<double> y1) {
        const std::size_t n = y0.size();
        derivative_into(phase, y0, spec_, k1_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + 0.5 * h * k1_[i];
        derivative_into(phase, tmp_, spec_, k2_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + 0.5 * h * k2_[i];
        derivative_into(phase, tmp_, spec_, k3_);
        for (std::size_t i = 0; i < n; ++i) tmp_[i] = y0[i] + h * k3_[i];
        derivative_into(phase, tmp_, spec_, k4_);
        for (std::size_t i = 0; i < n; ++i) {
            y1[i] = y0[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
        }
    }

private:
    const ConverterSpec& spec_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

bool all_finite(std::span<const double> y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

/// Threshold watched during a phase: f = sign * (y[index] - threshold).
struct Watch {
    EventKind kind;
    int output;
    std::size_t index;
    double sign;
    double threshold;
    bool fires_negative;  // fired when f < 0, otherwise when f >= 0

    [[nodiscard]] double value(std::span<const double> y) const {
        return sign * (y[index] - threshold);
    }
    [[nodiscard]] bool fired(double f) const { return fires_negative ? f < 0.0 : f >= 0.0; }
};

class Simulation {
public:
    explicit Simulation(const ConverterSpec& spec)
        : spec_(spec), rk_(spec), y_(rk_.dim()), y_next_(rk_.dim()), y_probe_(rk_.dim()),
          trace_(spec.outputs.size()) {
        y_[kStateBoot] = nominal_boot_voltage(spec_);
        ctrl_ = initial_controller(spec_);
        ledger_.e_out.assign(spec_.outputs.size(), 0.0);
        trace_.spec = spec_;
    }

    SimulationResult run() {
        const double dt = spec_.sim.dt;
        const double t_end = spec_.sim.t_end;
        const auto n_steps =
            static_cast<std::size_t>(std::max(1.0, std::ceil(t_end / dt * (1.0 - 1e-12))));
        const std::size_t every = spec_.sim.sample_every;

        constexpr std::size_t kCheckpoints = 20;
        std::size_t next_cp = 0;
        auto checkpoint_at = [&](std::size_t m) { return m * n_steps / kCheckpoints; };

        trace_.events.reserve(1024);
        settle();
        power_flows_into(ctrl_.mode, y_, spec_, p_now_);
        record_sample();
        push_checkpoint();
        next_cp = 1;

        for (std::size_t k = 1; k <= n_steps; ++k) {
            const double t_grid = k == n_steps ? t_end : static_cast<double>(k) * dt;
            while (t_ < t_grid) advance_to(t_grid);
            if (k % every == 0 || k == n_steps) record_sample();
            while (next_cp <= kCheckpoints && checkpoint_at(next_cp) <= k) {
                push_checkpoint();
                ++next_cp;
            }
        }

        SimulationResult result;
        ledger_.e_stored = stored_energy(y_, spec_);
        result.ledger = ledger_;
        result.checkpoints = std::move(checkpoints_);
        result.trace = std::move(trace_);
        return result;
    }

private:
    void watches_for(const ControllerState& ctrl, std::vector<Watch>& out) const {
        out.clear();
        const Phase& ph = ctrl.mode;
        switch (ph.kind) {
            case PhaseKind::Charge:
                out.push_back({EventKind::PeakCurrent, -1, kStateCurrent, 1.0,
                               spec_.controller.i_pk, false});
                break;
            case PhaseKind::Deliver: {
                out.push_back({EventKind::CurrentZero, static_cast<int>(ph.output), kStateCurrent,
                               -1.0, 0.0, false});
                if (!ctrl.residual) {
                    const auto& o = spec_.outputs[ph.output];
                    out.push_back({EventKind::ComparatorTrip, static_cast<int>(ph.output),
                                   kStateOutputs + ph.output, 1.0, o.target + o.hysteresis,
                                   false});
                }
                break;
            }
            case PhaseKind::Idle:
                for (std::size_t j = 0; j < spec_.outputs.size(); ++j) {
                    const auto& o = spec_.outputs[j];
                    out.push_back({EventKind::ComparatorTrip, static_cast<int>(j),
                                   kStateOutputs + j, 1.0, o.target - o.hysteresis, true});
                }
                break;
        }
    }

    /// One sub-step toward t_grid, stopping early at the first event.
    void advance_to(double t_grid) {
        const Phase phase = ctrl_.mode;
        double t_new = t_grid;
        std::optional<EventKind> time_event;

        if (phase.is_charge()) {
            const double t_lim = ctrl_.t_phase_start + spec_.controller.t_on_max;
            if (t_lim <= t_grid) {
                t_new = t_lim;
                time_event = EventKind::OnTimeLimit;
            }
        } else if (phase.is_deliver() && !ctrl_.residual) {
            const double t_lim = ctrl_.t_phase_start + spec_.controller.t_deliver_max;
            if (t_lim <= t_grid) {
                t_new = t_lim;
                time_event = EventKind::DeliverTimeout;
            }
        }

        const double h = t_new - t_;
        if (h > 0.0) rk_.advance(phase, y_, h, y_next_);
        else std::copy(y_.begin(), y_.end(), y_next_.begin());

        watches_for(ctrl_, watches_);
        const Watch* hit = nullptr;
        double tau_hit = h;
        for (const auto& w : watches_) {
            const double f0 = w.value(y_);
            const double f1 = w.value(y_next_);
            if (w.fired(f0) || !w.fired(f1)) continue;
            const double scale = std::max({std::abs(f0), std::abs(f1), std::abs(w.threshold)});
            const double tau = locate_event(
                [&](double s) {
                    rk_.advance(phase, y_, s, y_probe_);
                    return w.value(y_probe_);
                },
                0.0, h, scale);
            if (hit == nullptr || tau < tau_hit) {
                hit = &w;
                tau_hit = tau;
            }
        }

        std::optional<Watch> fired;
        if (hit != nullptr) {
            fired = *hit;
            rk_.advance(phase, y_, tau_hit, y_next_);
            t_new = t_ + tau_hit;
            time_event.reset();
        }

        if (!all_finite(y_next_)) {
            std::ostringstream msg;
            msg << "non-finite state at t=" << t_new << " in phase " << phase.tag();
            throw SimulationError(msg.str());
        }
        if (fired && fired->kind == EventKind::CurrentZero) y_next_[kStateCurrent] = 0.0;

        power_flows_into(phase, y_next_, spec_, p_next_);
        accumulate(t_new - t_);
        std::swap(y_, y_next_);
        std::swap(p_now_, p_next_);
        t_ = t_new;

        if (fired) {
            log(fired->kind, fired->output, "");
            boundary();
        } else if (time_event) {
            const int out = phase.is_deliver() ? static_cast<int>(phase.output) : -1;
            log(*time_event, out, *time_event == EventKind::DeliverTimeout ? "warning" : "");
            boundary();
        }
    }

    void accumulate(double dt) {
        const double half = 0.5 * dt;
        ledger_.e_in += half * (p_now_.p_in + p_next_.p_in);
        ledger_.e_drive += half * (p_now_.p_drive + p_next_.p_drive);
        ledger_.e_cond += half * (p_now_.p_cond + p_next_.p_cond);
        ledger_.e_diode += half * (p_now_.p_diode + p_next_.p_diode);
        ledger_.e_boot_recharge += half * (p_now_.p_recharge + p_next_.p_recharge);
        for (std::size_t j = 0; j < ledger_.e_out.size(); ++j) {
            ledger_.e_out[j] += half * (p_now_.p_out[j] + p_next_.p_out[j]);
        }
    }

    void boundary() {
        settle();
        power_flows_into(ctrl_.mode, y_, spec_, p_now_);
        record_sample();
    }

    [[nodiscard]] CircuitState snapshot() const {
        CircuitState s;
        s.t = t_;
        s.i_l = y_[kStateCurrent];
        s.v_boot = y_[kStateBoot];
        s.v_out.assign(y_.begin() + kStateOutputs, y_.end());
        s.phase = ctrl_.mode;
        return s;
    }

    /// Iterates the controller to a fixed point at the current instant.
    void settle() {
        const std::size_t max_iter = 4 + 2 * spec_.outputs.size();
        for (std::size_t iter = 0; iter < max_iter; ++iter) {
            const Action a = next_action(ctrl_, snapshot(), spec_);
            if (a.ctrl == ctrl_) return;
            const Phase prev = ctrl_.mode;
            ctrl_ = a.ctrl;
            if (a.phase == prev) continue;

            std::string detail{prev.tag()};
            detail += "->";
            detail += a.phase.tag();
            if (a.phase.is_deliver()) {
                detail += a.phase.input_connected ? " boost" : " freewheel";
                if (ctrl_.residual) detail += " residual";
            }
            log(EventKind::PhaseChange, a.phase.selected(), std::move(detail));

            if (!a.phase.is_deliver()) continue;
            if (!a.phase.switch_enhanced) {
                log(EventKind::Underdrive, static_cast<int>(a.phase.output),
                    "gate overdrive below v_th, conducting through D_j");
            } else if (!(prev.is_deliver() && prev.output == a.phase.output &&
                         prev.switch_enhanced)) {
                apply_gate_charge(a.phase.output);
            }
        }
    }

    /// Charge sharing between C_boot and the gate of the pair being turned on.
    void apply_gate_charge(std::size_t j) {
        const double cb = spec_.bootstrap.c_boot;
        const double cg = spec_.outputs[j].c_gate;
        const double v = y_[kStateBoot];
        const double v_after = v * cb / (cb + cg);
        ledger_.e_gate += 0.5 * cb * (v * v - v_after * v_after);
        y_[kStateBoot] = v_after;
    }

    void log(EventKind kind, int output, std::string detail) {
        trace_.events.push_back({t_, kind, output, std::move(detail)});
    }

    void record_sample() {
        if (!trace_.empty() && !(t_ > trace_.samples().back().t)) return;
        const std::span<const double> v_out(y_.data() + kStateOutputs, spec_.outputs.size());
        const auto nv = node_voltages(ctrl_.mode, y_[kStateCurrent], y_[kStateBoot], v_out, spec_);
        Sample s;
        s.t = t_;
        s.i_l = y_[kStateCurrent];
        s.v_l_plus = nv.v_l_plus;
        s.v_boot_top = nv.v_boot_top;
        s.v_boot = y_[kStateBoot];
        s.phase = ctrl_.mode.tag();
        s.selected = ctrl_.mode.selected();
        trace_.append(s, v_out);
    }

    void push_checkpoint() {
        LedgerCheckpoint cp{t_, ledger_};
        cp.ledger.e_stored = stored_energy(y_, spec_);
        checkpoints_.push_back(std::move(cp));
    }

    const ConverterSpec& spec_;
    Integrator rk_;
    std::vector<double> y_, y_next_, y_probe_;
    double t_ = 0.0;
    ControllerState ctrl_;
    EnergyLedger ledger_;
    PowerFlows p_now_, p_next_;
    std::vector<Watch> watches_;
    Trace trace_;
    std::vector<LedgerCheckpoint> checkpoints_;
};

}  // namespace

CircuitState step(const CircuitState& state, const ConverterSpec& spec, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be > 0");
    Integrator rk(spec);
    std::vector<double> y(rk.dim()), y1(rk.dim());
    y[kStateCurrent] = state.i_l;
    y[kStateBoot] = state.v_boot;
    std::copy(state.v_out.begin(), state.v_out.end(), y.begin() + kStateOutputs);
    rk.advance(state.phase, y, dt, y1);
    if (!all_finite(y1)) {
        std::ostringstream msg;
        msg << "non-finite state after step at t=" << state.t + dt;
        throw SimulationError(msg.str());
    }
    CircuitState next = state;
    next.t = state.t + dt;
    next.i_l = y1[kStateCurrent];
    next.v_boot = y1[kStateBoot];
    std::copy(y1.begin() + kStateOutputs, y1.end(), next.v_out.begin());
    return next;
}

double locate_event(const std::function<double(double)>& f, double t0, double t1, double scale) {
    const double f0 = f(t0);
    double f1 = f(t1);
    const bool side0 = f0 < 0.0;
    const bool side1 = f1 < 0.0;
    if (side0 == side1) throw std::invalid_argument("locate_event: no sign change over the step");
    if (scale <= 0.0) scale = std::max(std::abs(f0), std::abs(f1));
    const double tol = 1e-12 * scale;

    double lo = t0;
    double hi = t1;
    for (int iter = 0; iter < 40 && std::abs(f1) > tol; ++iter) {
        const double mid = lo + 0.5 * (hi - lo);
        const double fm = f(mid);
        if ((fm < 0.0) == side1) {
            hi = mid;
            f1 = fm;
        } else {
            lo = mid;
        }
    }
    return hi;
}

SimulationResult simulate(const ConverterSpec& spec) {
    const auto violations = validate(spec);
    if (!violations.empty()) {
        std::string msg = "simulate: invalid spec:";
        for (const auto& v : violations) msg += " " + v.path + " (" + v.message + ");";
        throw std::invalid_argument(msg);
    }
    return Simulation(spec).run();
}

}  // namespace simo
