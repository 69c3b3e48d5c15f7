#include <catch_amalgamated.hpp>

#include "simo/cli_io.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace simo;
using Catch::Approx;
using simo::testing::config_path;
using simo::testing::make_spec;

namespace {

const char* const kMinimal = R"(# one output
[input]
v_in = 3.7

[inductor]
l = 4.7e-6
r_sp = 0.05
r_sy = 0.05

[bootstrap]
c_boot = 100e-9
v_drive = 5.3
diode_v_f = 0.3
r_charge = 2

[controller]
i_pk = 0.135
t_on_max = 400e-9
t_deliver_max = 2e-6

[sim]
t_end = 1e-5

[output.1]
target = 3.3
c_out = 22e-6
load = 5e-3
r_on_each = 0.2
c_gate = 50e-12
diode_v_f = 0.6
hysteresis = 3e-3
)";

std::string with(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

std::vector<Diagnostic> diagnostics_of(const std::string& text) {
    try {
        (void)parse_config(text);
    } catch (const ConfigError& e) {
        return e.diagnostics();
    }
    return {};
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() / ("simo_test_" + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

int cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
        std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (out_text) *out_text = out.str();
    if (err_text) *err_text = err.str();
    return code;
}

}  // namespace

TEST_CASE("minimal document parses with defaults", "[cli_io]") {
    const auto spec = parse_config(kMinimal);
    REQUIRE(spec.n_outputs() == 1);
    CHECK(spec.outputs[0].target == 3.3);
    CHECK(spec.inductor.r_series == 0.0);
    CHECK(spec.sim.dt == 1e-9);
    CHECK(spec.sim.sample_every == 1);
    CHECK(spec.controller.start_index == 0);
    CHECK(spec.controller.arbitration == Arbitration::RoundRobin);
    CHECK(spec.outputs[0].v_th == 1.0);
    CHECK(spec.outputs[0].load.v_floor == 0.1);
}

TEST_CASE("non-contiguous outputs are rejected", "[cli_io]") {
    const std::string text = with(kMinimal, "[output.1]", "[output.3]") +
                             "\n[output.1]\ntarget = 1.8\nc_out = 22e-6\nload = 5e-3\n"
                             "r_on_each = 0.2\nc_gate = 50e-12\ndiode_v_f = 0.6\nhysteresis = 3e-3\n";
    const auto d = diagnostics_of(text);
    REQUIRE_FALSE(d.empty());
    CHECK(d[0].message.find("non-contiguous output sections") != std::string::npos);
}

TEST_CASE("shipped four-output config", "[cli_io]") {
    const auto spec = load_config(config_path("four_outputs.ini"));
    CHECK(spec.v_in == 3.7);
    REQUIRE(spec.n_outputs() == 4);
    CHECK(spec.outputs[0].target == 12.0);
    CHECK(spec.outputs[1].target == 10.0);
    CHECK(spec.outputs[2].target == 3.3);
    CHECK(spec.outputs[3].target == 1.8);
    CHECK(spec.controller.i_pk == 0.135);
    CHECK(spec.bootstrap.c_boot == 100e-9);
    CHECK(nominal_boot_voltage(spec) == Approx(5.0));
    for (const auto& o : spec.outputs) CHECK(o.c_out == 22e-6);
    CHECK(validate(spec).empty());
    CHECK(validate(load_config(config_path("low_loss_boost.ini"))).empty());
}

TEST_CASE("config errors carry line numbers", "[cli_io]") {
    SECTION("unknown key") {
        const auto d = diagnostics_of(with(kMinimal, "v_in = 3.7", "v_in = 3.7\nv_inn = 3"));
        REQUIRE(d.size() == 1);
        CHECK(d[0].line == 4);
        CHECK(d[0].message.find("v_inn") != std::string::npos);
    }
    SECTION("duplicate key") {
        const auto d = diagnostics_of(with(kMinimal, "v_in = 3.7", "v_in = 3.7\nv_in = 3.8"));
        REQUIRE(d.size() == 1);
        CHECK(d[0].line == 4);
    }
    SECTION("duplicate section") {
        const auto d = diagnostics_of(std::string(kMinimal) + "[input]\n");
        REQUIRE_FALSE(d.empty());
        CHECK(d[0].line == 32);
    }
    SECTION("non-numeric value") {
        const auto d = diagnostics_of(with(kMinimal, "l = 4.7e-6", "l = 4.7 uH"));
        REQUIRE(d.size() == 1);
        CHECK(d[0].line == 6);
    }
    SECTION("missing required key") {
        const auto d = diagnostics_of(with(kMinimal, "i_pk = 0.135\n", ""));
        REQUIRE(d.size() == 1);
        CHECK(d[0].message.find("i_pk") != std::string::npos);
    }
    SECTION("semantic violation points at its key") {
        const auto d = diagnostics_of(with(kMinimal, "c_out = 22e-6", "c_out = 0"));
        REQUIRE(d.size() == 1);
        CHECK(d[0].line == 26);
        CHECK(d[0].message.find("outputs[1].c_out") != std::string::npos);
    }
    SECTION("everything is reported at once") {
        auto text = with(kMinimal, "l = 4.7e-6", "l = x");
        text = with(text, "v_in = 3.7", "v_in = 3.7\nbogus = 1");
        CHECK(diagnostics_of(text).size() == 2);
    }
}

TEST_CASE("render then parse is the identity", "[cli_io][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> scale(0.5, 2.0);
    std::uniform_int_distribution<int> outputs(1, 6);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> targets;
        const int n = outputs(rng);
        for (int k = 0; k < n; ++k) targets.push_back(1.5 + 2.0 * k * scale(rng));
        auto spec = make_spec(targets);
        spec.v_in *= scale(rng);
        spec.inductor.l *= scale(rng);
        spec.inductor.r_series *= scale(rng);
        spec.bootstrap.c_boot *= scale(rng);
        spec.controller.i_pk *= scale(rng);
        spec.controller.start_index = static_cast<std::size_t>(trial) % targets.size();
        spec.controller.arbitration = trial % 2 ? Arbitration::Priority : Arbitration::RoundRobin;
        spec.driver.r1 *= scale(rng);
        spec.sim.dt *= scale(rng);
        for (auto& o : spec.outputs) {
            o.c_out *= scale(rng);
            o.load.i_load *= scale(rng);
            o.r_on_each *= scale(rng);
            o.c_gate *= scale(rng);
            o.hysteresis *= scale(rng);
        }
        REQUIRE(validate(spec).empty());
        const auto back = parse_config(render_config(spec));
        CHECK(render_config(back) == render_config(spec));
        CHECK(back.v_in == spec.v_in);
        CHECK(back.inductor.l == spec.inductor.l);
        CHECK(back.controller.i_pk == spec.controller.i_pk);
        CHECK(back.controller.start_index == spec.controller.start_index);
        CHECK(back.controller.arbitration == spec.controller.arbitration);
        CHECK(back.sim.dt == spec.sim.dt);
        REQUIRE(back.outputs.size() == spec.outputs.size());
        for (std::size_t j = 0; j < spec.outputs.size(); ++j) {
            CHECK(back.outputs[j].c_out == spec.outputs[j].c_out);
            CHECK(back.outputs[j].load.i_load == spec.outputs[j].load.i_load);
            CHECK(back.outputs[j].c_gate == spec.outputs[j].c_gate);
        }
    }
}

TEST_CASE("document overrides", "[cli_io]") {
    auto doc = ConfigDocument::parse(kMinimal);
    doc.set("controller.i_pk", "0.2");
    doc.set("output.*.r_on_each", "0.1");
    doc.set("sim.sample_every", "10");
    const auto spec = parse_config(doc);
    CHECK(spec.controller.i_pk == 0.2);
    CHECK(spec.outputs[0].r_on_each == 0.1);
    CHECK(spec.sim.sample_every == 10);
    CHECK_THROWS_AS(doc.set("nosuch.key", "1"), std::invalid_argument);
}

TEST_CASE("trace CSV", "[cli_io]") {
    SECTION("empty trace is the header") {
        std::ostringstream out;
        write_trace_csv(Trace(2), out);
        CHECK(out.str() == "time,i_l,v_l_plus,v_boot_top,v_boot,phase,selected,v_out_1,v_out_2\n");
    }
    SECTION("three samples give four lines") {
        Trace tr(1);
        for (int k = 0; k < 3; ++k) {
            Sample s;
            s.t = k * 1e-9;
            s.i_l = k * 0.01;
            s.phase = k == 1 ? 'D' : 'C';
            s.selected = k == 1 ? 0 : -1;
            const double v[] = {3.3};
            tr.append(s, v);
        }
        std::ostringstream out;
        const auto bytes = write_trace_csv(tr, out);
        const auto text = out.str();
        CHECK(bytes == text.size());
        CHECK(std::count(text.begin(), text.end(), '\n') == 4);
        CHECK(text.find(",D,1,") != std::string::npos);
        CHECK(text.find(",C,-1,") != std::string::npos);
    }
    SECTION("round trip of a simulated trace") {
        auto spec = make_spec();
        spec.sim.t_end = 10e-6;
        const auto tr = simulate(spec).trace;
        std::stringstream buf;
        write_trace_csv(tr, buf);
        const auto back = read_trace_csv(buf);
        REQUIRE(back.size() == tr.size());
        REQUIRE(back.n_outputs() == 4);
        for (std::size_t i = 0; i < tr.size(); ++i) {
            const auto& a = tr.sample(i);
            const auto& b = back.sample(i);
            CHECK(b.i_l == Approx(a.i_l).epsilon(1e-9).margin(1e-300));
            CHECK(b.phase == a.phase);
            CHECK(b.selected == a.selected);
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(back.v_out(i, j) == Approx(tr.v_out(i, j)).epsilon(1e-9).margin(1e-300));
            }
        }
    }
    SECTION("output is byte deterministic") {
        auto spec = make_spec();
        spec.sim.t_end = 5e-6;
        const auto tr = simulate(spec).trace;
        std::ostringstream a, b;
        write_trace_csv(tr, a);
        write_trace_csv(tr, b);
        CHECK(a.str() == b.str());
    }
    SECTION("malformed input is rejected") {
        std::istringstream bad_header("t,i\n");
        CHECK_THROWS(read_trace_csv(bad_header));
        std::istringstream bad_phase(
            "time,i_l,v_l_plus,v_boot_top,v_boot,phase,selected,v_out_1\n0,0,0,5,5,X,-1,0\n");
        CHECK_THROWS(read_trace_csv(bad_phase));
    }
    SECTION("unwritable path names the path") {
        try {
            write_trace_csv(Trace(1), std::filesystem::path("/nonexistent/dir/t.csv"));
            FAIL("expected a write failure");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("/nonexistent/dir/t.csv") != std::string::npos);
        }
    }
}

TEST_CASE("number formatting keeps full precision", "[cli_io]") {
    CHECK(format_number(0.135) == "0.135");
    CHECK(std::stod(format_number(0.1 + 0.2)) == 0.1 + 0.2);
    CHECK(std::stod(format_number(4.7e-6)) == 4.7e-6);
}

TEST_CASE("command line", "[cli_io]") {
    SECTION("cost table") {
        std::string out;
        CHECK(cli({"cost", "--outputs", "4"}, &out) == 0);
        CHECK(out.find("conventional") != std::string::npos);
        CHECK(out.find("pads saved: 7") != std::string::npos);
        std::istringstream lines(out);
        std::string line;
        bool conventional = false, shared = false;
        while (std::getline(lines, line)) {
            std::istringstream f(line);
            std::string label;
            std::size_t caps = 0, pads = 0;
            f >> label >> caps >> pads;
            if (label == "conventional") conventional = caps == 4 && pads == 8;
            if (label == "shared") shared = caps == 1 && pads == 1;
        }
        CHECK(conventional);
        CHECK(shared);
    }
    SECTION("usage errors") {
        CHECK(cli({}) == 1);
        CHECK(cli({"frobnicate"}) == 1);
        CHECK(cli({"cost"}) == 1);
        CHECK(cli({"cost", "--outputs", "0"}) == 1);
        CHECK(cli({"run", "--config", "x.ini", "--trace", "t.csv", "--bogus"}) == 1);
    }
    SECTION("config error exits with 2 and names the line") {
        TempDir dir;
        const auto cfg = dir.path / "bad.ini";
        std::ofstream(cfg) << with(kMinimal, "l = 4.7e-6", "l = -1");
        std::string err;
        CHECK(cli({"run", "--config", cfg.string(), "--trace", (dir.path / "t.csv").string()}, nullptr,
                  &err) == 2);
        CHECK(err.find(":6") != std::string::npos);
        CHECK(cli({"run", "--config", (dir.path / "missing.ini").string(), "--trace",
                   (dir.path / "t.csv").string()}) != 0);
    }
    SECTION("run then analyze") {
        TempDir dir;
        const auto cfg = dir.path / "min.ini";
        std::ofstream(cfg) << kMinimal;
        const auto csv = dir.path / "t.csv";
        std::string out;
        REQUIRE(cli({"run", "--config", cfg.string(), "--trace", csv.string()}, &out) == 0);
        CHECK(out.find("peak inductor current") != std::string::npos);
        REQUIRE(cli({"analyze", "--trace", csv.string(), "--format", "kv", "--spec", cfg.string()},
                    &out) == 0);
        CHECK(out.find("peak_current=0.135") != std::string::npos);
        CHECK(out.find("regulated.1=0") != std::string::npos);
    }
    SECTION("analyze a constant trace") {
        TempDir dir;
        const auto csv = dir.path / "flat.csv";
        {
            std::ofstream f(csv);
            f << "time,i_l,v_l_plus,v_boot_top,v_boot,phase,selected,v_out_1,v_out_2\n";
            for (int k = 0; k < 100; ++k) f << k * 1e-9 << ",0,0,5,5,I,-1,3.3,1.8\n";
        }
        std::string out;
        REQUIRE(cli({"analyze", "--trace", csv.string(), "--format", "kv"}, &out) == 0);
        CHECK(out.find("ripple.1=0\n") != std::string::npos);
        CHECK(out.find("ripple.2=0\n") != std::string::npos);
        CHECK(out.find("efficiency") == std::string::npos);
        REQUIRE(cli({"analyze", "--trace", csv.string()}, &out) == 0);
        CHECK(out.find("n/a") != std::string::npos);
    }
    SECTION("sweep is ordered by parameter") {
        TempDir dir;
        const auto cfg = dir.path / "min.ini";
        std::ofstream(cfg) << with(kMinimal, "t_end = 1e-5", "t_end = 4e-6");
        std::string out;
        REQUIRE(cli({"sweep", "--config", cfg.string(), "--param", "controller.i_pk", "--from", "0.2",
                     "--to", "0.1", "--steps", "3", "--metric", "peak_current"},
                    &out) == 0);
        std::istringstream lines(out);
        std::string header, line;
        std::getline(lines, header);
        CHECK(header == "controller.i_pk\tpeak_current");
        std::vector<double> params, peaks;
        while (std::getline(lines, line)) {
            const auto tab = line.find('\t');
            params.push_back(std::stod(line.substr(0, tab)));
            peaks.push_back(std::stod(line.substr(tab + 1)));
        }
        REQUIRE(params.size() == 3);
        CHECK(params[0] == Approx(0.1));
        CHECK(params[2] == Approx(0.2));
        for (std::size_t k = 0; k < 3; ++k) CHECK(peaks[k] == Approx(params[k]).epsilon(1e-6));
        CHECK(cli({"sweep", "--config", cfg.string(), "--param", "controller.i_pk", "--from", "0.1",
                   "--to", "0.2", "--steps", "2", "--metric", "nonsense"}) == 1);
    }
}
