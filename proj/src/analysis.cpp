#include "simo/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace simo {

std::size_t window_start(const Trace& trace, double window) {
    if (!(window > 0.0 && window <= 1.0)) {
        throw std::invalid_argument("window must lie in (0, 1]");
    }
    if (trace.empty()) throw std::invalid_argument("trace is empty");
    const double t0 = trace.samples().front().t;
    const double t1 = trace.samples().back().t;
    const double t_start = t1 - window * (t1 - t0);
    const auto& s = trace.samples();
    const auto it = std::lower_bound(s.begin(), s.end(), t_start,
                                     [](const Sample& a, double t) { return a.t < t; });
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - s.begin(), s.size() - 1));
}

RippleResult ripple(const Trace& trace, std::size_t j, double window) {
    if (j >= trace.n_outputs()) throw std::out_of_range("ripple: no such output");
    const std::size_t first = window_start(trace, window);

    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double area = 0.0;
    for (std::size_t i = first; i < trace.size(); ++i) {
        const double v = trace.v_out(i, j);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (i > first) {
            const double dt = trace.sample(i).t - trace.sample(i - 1).t;
            area += 0.5 * dt * (v + trace.v_out(i - 1, j));
        }
    }

    RippleResult r;
    r.value = hi - lo;
    const double span = trace.samples().back().t - trace.sample(first).t;
    r.mean = span > 0.0 ? area / span : trace.v_out(first, j);
    if (trace.spec && j < trace.spec->outputs.size()) {
        const double target = trace.spec->outputs[j].target;
        r.regulated = std::abs(r.mean - target) <= 0.1 * target;
    }
    return r;
}

double peak_current(const Trace& trace) {
    if (trace.empty()) throw std::invalid_argument("peak_current: trace is empty");
    double peak = 0.0;
    for (const auto& s : trace.samples()) peak = std::max(peak, s.i_l);
    return peak;
}

std::optional<double> efficiency(const EnergyLedger& ledger) {
    if (!(ledger.total_input() > 0.0)) return std::nullopt;
    const double out = ledger.total_output();
    const double denom = out + ledger.total_losses();
    if (!(denom > 0.0)) return std::nullopt;
    return out / denom;
}

std::optional<double> input_efficiency(const EnergyLedger& ledger) {
    if (!(ledger.total_input() > 0.0)) return std::nullopt;
    return ledger.total_output() / ledger.total_input();
}

EnergyLedger window_ledger(const SimulationResult& result, double window) {
    if (!(window > 0.0 && window <= 1.0)) {
        throw std::invalid_argument("window must lie in (0, 1]");
    }
    if (result.checkpoints.empty()) return result.ledger;
    const double t_end = result.checkpoints.back().t;
    const double t_start = t_end * (1.0 - window);
    const LedgerCheckpoint* start = &result.checkpoints.front();
    for (const auto& cp : result.checkpoints) {
        // Checkpoint times are grid-rounded; accept a relative slack of 1e-9.
        if (cp.t <= t_start * (1.0 + 1e-9)) start = &cp;
    }
    return result.ledger - start->ledger;
}

TrackingReport verify_tracking(const Trace& trace, const ConverterSpec& spec) {
    TrackingReport rep;
    const double v_c = nominal_boot_voltage(spec);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Sample& s = trace.sample(i);
        if (s.phase == 'I') {
            ++rep.idle_samples;
            rep.idle_top_error = std::max(rep.idle_top_error, std::abs(s.v_boot_top - v_c));
            continue;
        }
        if (s.phase != 'D' || s.selected < 0) continue;
        ++rep.deliver_samples;
        const auto j = static_cast<std::size_t>(s.selected);
        const double v_sel = trace.v_out(i, j);
        const double deviation = std::abs(s.v_boot_top - v_sel - s.v_boot);
        const double bound = s.i_l * 2.0 * spec.outputs.at(j).r_on_each;
        const double slack = 1e-10 * std::max(1.0, std::abs(s.v_boot_top));
        const double excess = deviation - bound;
        if (rep.deliver_samples == 1) rep.max_excess = excess;
        rep.max_deviation = std::max(rep.max_deviation, deviation);
        rep.max_excess = std::max(rep.max_excess, excess);
        if (excess > slack) rep.bound_holds = false;
        rep.droop = std::max(rep.droop, std::abs(s.v_boot - v_c));
    }
    return rep;
}

std::vector<double> gate_overdrive_series(const Trace& trace, const ConverterSpec& spec) {
    std::vector<double> out;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Sample& s = trace.sample(i);
        if (s.phase != 'D' || s.selected < 0) continue;
        const auto j = static_cast<std::size_t>(s.selected);
        CircuitState cs;
        cs.t = s.t;
        cs.i_l = s.i_l;
        cs.v_boot = s.v_boot;
        const auto v = trace.v_out(i);
        cs.v_out.assign(v.begin(), v.end());
        // A pair that turned on normally has its gate at v_boot_top.
        const bool enhanced = s.v_boot_top - s.v_l_plus >= spec.outputs.at(j).v_th;
        cs.phase = Phase::deliver(j, true, enhanced);
        out.push_back(gate_overdrive(cs, spec, j));
    }
    return out;
}

GateDriveCost gate_drive_cost(std::size_t n) {
    if (n == 0) throw std::invalid_argument("gate_drive_cost: need at least one output");
    GateDriveCost c;
    c.n = n;
    c.conventional = {n, 2 * n};
    c.proposed = {1, 1};
    c.pads_saved = c.conventional.pads - c.proposed.pads;
    c.offchip_cap_ratio =
        static_cast<double>(c.conventional.caps) / static_cast<double>(c.proposed.caps);
    return c;
}

namespace {

std::vector<double> service_rate(const Trace& trace, double window) {
    std::vector<double> rate(trace.n_outputs(), 0.0);
    const std::size_t first = window_start(trace, window);
    const double span = trace.samples().back().t - trace.sample(first).t;
    if (!(span > 0.0)) return rate;
    for (std::size_t i = std::max<std::size_t>(first, 1); i < trace.size(); ++i) {
        const Sample& s = trace.sample(i);
        if (s.phase == 'D' && trace.sample(i - 1).phase == 'C' && s.selected >= 0) {
            rate[static_cast<std::size_t>(s.selected)] += 1.0;
        }
    }
    for (auto& r : rate) r /= span;
    return rate;
}

}  // namespace

Metrics compute_metrics(const Trace& trace, double window) {
    Metrics m;
    m.window = window;
    for (std::size_t j = 0; j < trace.n_outputs(); ++j) m.outputs.push_back(ripple(trace, j, window));
    m.i_l_peak = peak_current(trace);
    m.service_rate = service_rate(trace, window);
    if (trace.spec) m.tracking = verify_tracking(trace, *trace.spec);
    return m;
}

Metrics compute_metrics(const SimulationResult& result, double window) {
    Metrics m = compute_metrics(result.trace, window);
    const EnergyLedger w = window_ledger(result, window);
    m.efficiency = efficiency(w);
    m.input_efficiency = input_efficiency(w);
    m.losses = w;
    return m;
}

}  // namespace simo
