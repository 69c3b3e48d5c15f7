#include "simo/spec_model.hpp"

#include <algorithm>
#include <cmath>

namespace simo {

namespace {

class Checker {
public:
    explicit Checker(std::vector<Violation>& out) : out_(out) {}

    void positive(const std::string& path, double v) {
        if (!(std::isfinite(v) && v > 0.0)) out_.push_back({path, "must be finite and > 0"});
    }
    void non_negative(const std::string& path, double v) {
        if (!(std::isfinite(v) && v >= 0.0)) out_.push_back({path, "must be finite and >= 0"});
    }
    void fail(const std::string& path, std::string message) {
        out_.push_back({path, std::move(message)});
    }

private:
    std::vector<Violation>& out_;
};

}  // namespace

std::vector<Violation> validate(const ConverterSpec& spec) {
    std::vector<Violation> out;
    Checker check(out);

    check.positive("v_in", spec.v_in);
    check.positive("inductor.l", spec.inductor.l);
    check.non_negative("inductor.r_series", spec.inductor.r_series);

    const auto& bs = spec.bootstrap;
    check.positive("bootstrap.c_boot", bs.c_boot);
    check.positive("bootstrap.v_drive", bs.v_drive);
    check.non_negative("bootstrap.d_b.v_f", bs.d_b.v_f);
    check.non_negative("bootstrap.d_b.r_s", bs.d_b.r_s);
    check.positive("bootstrap.r_charge", bs.r_charge);

    check.positive("switch_sp.r_on", spec.switch_sp.r_on);
    check.positive("switch_sy.r_on", spec.switch_sy.r_on);

    if (spec.outputs.empty()) check.fail("outputs", "at least one output is required");

    double max_v_th = 0.0;
    for (std::size_t j = 0; j < spec.outputs.size(); ++j) {
        const auto& o = spec.outputs[j];
        const std::string p = "outputs[" + std::to_string(j + 1) + "].";
        check.positive(p + "target", o.target);
        check.positive(p + "c_out", o.c_out);
        check.non_negative(p + "load.i_load", o.load.i_load);
        check.positive(p + "load.v_floor", o.load.v_floor);
        check.positive(p + "r_on_each", o.r_on_each);
        check.positive(p + "c_gate", o.c_gate);
        check.non_negative(p + "d_j.v_f", o.d_j.v_f);
        check.non_negative(p + "d_j.r_s", o.d_j.r_s);
        check.positive(p + "hysteresis", o.hysteresis);
        check.positive(p + "v_th", o.v_th);
        if (o.hysteresis > 0.0 && o.target > 0.0 && !(o.hysteresis < o.target)) {
            check.fail(p + "hysteresis", "must be smaller than the target");
        }
        if (std::isfinite(o.v_th)) max_v_th = std::max(max_v_th, o.v_th);
    }
    if (std::isfinite(bs.v_drive) && bs.v_drive > 0.0 && !(bs.v_drive > max_v_th)) {
        check.fail("bootstrap.v_drive", "must exceed every output's gate threshold v_th");
    }

    const auto& c = spec.controller;
    check.positive("controller.i_pk", c.i_pk);
    check.positive("controller.t_on_max", c.t_on_max);
    check.positive("controller.t_deliver_max", c.t_deliver_max);
    if (!spec.outputs.empty() && c.start_index >= spec.outputs.size()) {
        check.fail("controller.start_index", "must name an existing output");
    }

    check.positive("driver.r1", spec.driver.r1);
    check.positive("driver.r2", spec.driver.r2);
    check.positive("driver.v_gs_unit", spec.driver.v_gs_unit);

    check.positive("sim.dt", spec.sim.dt);
    check.positive("sim.t_end", spec.sim.t_end);
    if (spec.sim.dt > spec.sim.t_end) check.fail("sim.dt", "must not exceed sim.t_end");
    if (spec.sim.sample_every == 0) check.fail("sim.sample_every", "must be >= 1");

    return out;
}

double nominal_boot_voltage(const ConverterSpec& spec) noexcept {
    return spec.bootstrap.v_drive - spec.bootstrap.d_b.v_f;
}

std::size_t highest_target_output(const ConverterSpec& spec) noexcept {
    std::size_t best = 0;
    for (std::size_t j = 1; j < spec.outputs.size(); ++j) {
        if (spec.outputs[j].target > spec.outputs[best].target) best = j;
    }
    return best;
}

}  // namespace simo
