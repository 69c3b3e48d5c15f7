#include <catch_amalgamated.hpp>

#include "simo/engine.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

using namespace simo;
using Catch::Approx;
using simo::testing::make_ideal_spec;
using simo::testing::make_spec;

namespace {

CircuitState start(const ConverterSpec& spec, Phase ph, double i_l, std::vector<double> v_out) {
    CircuitState s;
    s.phase = ph;
    s.i_l = i_l;
    s.v_boot = nominal_boot_voltage(spec);
    s.v_out = std::move(v_out);
    return s;
}

double relative_residual(const SimulationResult& r) {
    const auto d = r.ledger - r.checkpoints.front().ledger;
    return std::abs(d.balance_residual()) / d.total_input();
}

}  // namespace

TEST_CASE("one RK4 step of an ideal charge ramp", "[engine]") {
    const auto spec = make_ideal_spec();
    const auto s = step(start(spec, Phase::charge(), 0.0, {0, 0, 0, 0}), spec, 1e-9);
    CHECK(s.i_l == Approx(7.872340425531916e-4).epsilon(1e-12));
    CHECK(s.i_l == Approx(analytic_rl_segment(0, 3.7, 0, 4.7e-6, 1e-9)).epsilon(1e-12));
    CHECK(s.t == 1e-9);
}

TEST_CASE("idle step with no loads only advances time", "[engine]") {
    auto spec = make_spec();
    for (auto& o : spec.outputs) o.load.i_load = 0.0;
    const auto s0 = start(spec, Phase::idle(), 0.0, {12, 10, 3.3, 1.8});
    const auto s1 = step(s0, spec, 1e-9);
    CHECK(s1.t == 1e-9);
    CHECK(s1.i_l == s0.i_l);
    CHECK(s1.v_boot == s0.v_boot);
    CHECK(s1.v_out == s0.v_out);
}

TEST_CASE("deliver step with resistance matches the closed form", "[engine]") {
    auto spec = make_spec({12.0});
    spec.outputs[0].c_out = 1e6;  // freezes v_out so v_eff is constant
    spec.outputs[0].load.i_load = 0.0;
    const auto ph = Phase::deliver(0);
    const double r = loop_resistance(ph, spec);
    const double tau = spec.inductor.l / r;
    const auto s = step(start(spec, ph, 0.135, {12.0}), spec, tau / 1000);
    const double expect = analytic_rl_segment(0.135, 3.7 - 12.0, r, spec.inductor.l, tau / 1000);
    CHECK(std::abs(s.i_l - expect) <= 1e-10 * std::abs(expect));
}

TEST_CASE("constant-phase segment matches the closed form", "[engine][property]") {
    auto spec = make_spec({12.0});
    spec.outputs[0].c_out = 1e6;
    spec.outputs[0].load.i_load = 0.0;
    for (const Phase ph : {Phase::charge(), Phase::deliver(0)}) {
        const double r = loop_resistance(ph, spec);
        const double v_eff = ph.is_charge() ? 3.7 : 3.7 - 12.0;
        const double i0 = ph.is_charge() ? 0.0 : 0.135;
        const double seg = 150e-9;
        auto s = start(spec, ph, i0, {12.0});
        for (int k = 0; k < 1000; ++k) s = step(s, spec, seg / 1000);
        const double expect = analytic_rl_segment(i0, v_eff, r, spec.inductor.l, seg);
        CHECK(std::abs(s.i_l - expect) <= 1e-8 * std::abs(expect));
    }
}

TEST_CASE("non-finite state aborts the step", "[engine]") {
    const auto spec = make_spec();
    auto s = start(spec, Phase::charge(), std::nan(""), {0, 0, 0, 0});
    CHECK_THROWS_AS(step(s, spec, 1e-9), SimulationError);
}

TEST_CASE("event localization", "[engine]") {
    SECTION("symmetric linear crossing") {
        const double t = locate_event([](double t) { return 1.0 - 2.0 * t; }, 0.0, 1.0);
        CHECK(t == Approx(0.5).margin(1e-11));
    }
    SECTION("asymmetric linear crossing") {
        const double dt = 1e-9;
        const double t = locate_event([&](double t) { return 3.0 - 4.0 * t / dt; }, 0.0, dt, 1.0);
        CHECK(t == Approx(0.75 * dt).margin(1e-12 * dt));
        CHECK(3.0 - 4.0 * t / dt <= 0.0);  // lands on f(t1)'s side
    }
    SECTION("exponential charge segment against its inversion") {
        const double l = 4.7e-6, r = 0.15, v = 3.7, i_pk = 0.135;
        auto f = [&](double t) { return analytic_rl_segment(0.0, v, r, l, t) - i_pk; };
        const double t = locate_event(f, 1.7e-7, 1.75e-7, i_pk);
        CHECK(std::abs(t - *analytic_rl_crossing(0.0, v, r, l, i_pk)) <= 1e-12);
    }
    SECTION("no sign change") {
        CHECK_THROWS_AS(locate_event([](double) { return 1.0; }, 0.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("invalid spec is rejected before simulating", "[engine]") {
    auto spec = make_spec();
    spec.inductor.l = -1.0;
    CHECK_THROWS_AS(simulate(spec), std::invalid_argument);
}

TEST_CASE("energy is conserved over a run", "[engine][property]") {
    SECTION("zero loads, a few cycles") {
        auto spec = make_spec();
        for (auto& o : spec.outputs) o.load.i_load = 0.0;
        spec.sim.t_end = 5e-6;
        const auto r = simulate(spec);
        CHECK(relative_residual(r) <= 1e-4);
    }
    SECTION("loaded run, coarse step") {
        auto spec = make_spec();
        spec.sim.dt = 4e-9;
        spec.sim.t_end = 200e-6;
        CHECK(relative_residual(simulate(spec)) <= 1e-3);
    }
    SECTION("loaded run, 1 ns step") {
        auto spec = make_spec();
        spec.sim.t_end = 200e-6;
        const auto r = simulate(spec);
        CHECK(relative_residual(r) <= 1e-4);
        // Every window of the run balances too.
        for (std::size_t k = 1; k < r.checkpoints.size(); ++k) {
            const auto d = r.checkpoints[k].ledger - r.checkpoints[k - 1].ledger;
            CHECK(std::abs(d.balance_residual()) <= 1e-4 * d.total_input());
        }
        const auto& l = r.ledger;
        CHECK(l.e_in >= 0);
        CHECK(l.e_cond >= 0);
        CHECK(l.e_diode >= 0);
        CHECK(l.e_gate > 0);
        CHECK(l.e_boot_recharge >= 0);
        for (double e : l.e_out) CHECK(e >= 0);
    }
}

TEST_CASE("trace invariants of a cold start", "[engine][property]") {
    auto spec = make_spec();
    spec.sim.t_end = 100e-6;
    const auto r = simulate(spec);
    const auto& tr = r.trace;
    REQUIRE(tr.size() > 1000);
    REQUIRE(tr.spec.has_value());

    const double v_c = nominal_boot_voltage(spec);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const auto& s = tr.sample(i);
        CHECK(s.i_l >= 0.0);
        CHECK(s.v_boot >= 0.0);
        CHECK(s.v_boot <= spec.bootstrap.v_drive);
        for (double v : tr.v_out(i)) CHECK(v >= 0.0);
        if (i == 0) continue;
        const auto& p = tr.sample(i - 1);
        CHECK(s.t > p.t);
        if (s.phase == p.phase && s.selected == p.selected) {
            if (s.phase == 'D') CHECK(s.v_boot <= p.v_boot);
            else CHECK(s.v_boot >= p.v_boot);
        }
        if (s.phase != p.phase) {
            // Every phase change in the samples has a matching event.
            const bool logged = std::any_of(tr.events.begin(), tr.events.end(), [&](const auto& e) {
                return e.kind == EventKind::PhaseChange && e.t == s.t;
            });
            CHECK(logged);
        }
        if (p.phase == 'D' && s.phase != 'D') CHECK(s.i_l == 0.0);
    }
    CHECK(tr.sample(0).v_boot == v_c);
}

TEST_CASE("peak current is the configured i_pk", "[engine]") {
    auto spec = make_spec();
    spec.sim.t_end = 50e-6;
    const auto r = simulate(spec);
    double peak = 0;
    for (const auto& s : r.trace.samples()) peak = std::max(peak, s.i_l);
    CHECK(peak == Approx(0.135).epsilon(0.005));
    CHECK(peak >= 0.135);
}

TEST_CASE("on-time limit caps an ideal ramp", "[engine]") {
    auto spec = make_ideal_spec({12.0});
    spec.switch_sp.r_on = 1e-12;  // validate wants strictly positive on-resistance
    spec.switch_sy.r_on = 1e-12;
    spec.outputs[0].r_on_each = 1e-12;
    spec.controller.i_pk = 1.0;
    spec.controller.t_on_max = 1.715e-7;
    spec.sim.t_end = 1e-6;
    const auto r = simulate(spec);
    double peak = 0;
    for (const auto& s : r.trace.samples()) peak = std::max(peak, s.i_l);
    CHECK(peak == Approx(0.13501063829787235).epsilon(1e-6));
}

TEST_CASE("unloaded converter goes quiet after regulating", "[engine]") {
    auto spec = make_spec({1.8});
    spec.outputs[0].load.i_load = 0.0;
    spec.outputs[0].c_out = 1e-6;
    spec.sim.t_end = 200e-6;
    const auto r = simulate(spec);
    const auto& last = r.trace.sample(r.trace.size() - 1);
    CHECK(last.phase == 'I');
    CHECK(last.i_l == 0.0);
    CHECK(r.trace.v_out(r.trace.size() - 1, 0) >= 1.8 - 3e-3);
}

TEST_CASE("simulation is deterministic", "[engine][property]") {
    auto spec = make_spec();
    spec.sim.t_end = 30e-6;
    const auto a = simulate(spec);
    const auto b = simulate(spec);
    CHECK(a.trace == b.trace);
    CHECK(std::memcmp(&a.ledger.e_in, &b.ledger.e_in, sizeof(double)) == 0);
}

TEST_CASE("trace rejects non-increasing time", "[engine]") {
    Trace tr(1);
    const double v[] = {0.0};
    Sample s;
    s.t = 1.0;
    tr.append(s, v);
    CHECK_THROWS_AS(tr.append(s, v), std::invalid_argument);
    CHECK(tr.size() == 1);
}

TEST_CASE("underdrive is reported, not hidden", "[engine]") {
    auto spec = make_spec({3.3});
    spec.outputs[0].v_th = 5.2;  // above V_C so the pair can never be enhanced
    spec.sim.t_end = 5e-6;
    const auto r = simulate(spec);
    const bool reported = std::any_of(r.trace.events.begin(), r.trace.events.end(),
                                      [](const auto& e) { return e.kind == EventKind::Underdrive; });
    CHECK(reported);
    CHECK(r.ledger.e_diode > 0);
    CHECK(r.ledger.e_gate == 0);
}
