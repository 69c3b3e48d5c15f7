#include "simo/cli_io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>
#include <thread>

namespace simo {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

void print_config_error(const ConfigError& e, const std::string& source, std::ostream& err) {
    for (const auto& d : e.diagnostics()) {
        err << source;
        if (d.line > 0) err << ':' << d.line;
        err << ": error: " << d.message << '\n';
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({{0, "cannot open " + path}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

bool known_metric(std::string_view name, std::size_t n_outputs) {
    static constexpr std::string_view plain[] = {"efficiency", "input_efficiency", "peak_current",
                                                 "tracking_error", "droop"};
    if (std::find(std::begin(plain), std::end(plain), name) != std::end(plain)) return true;
    for (std::string_view prefix : {"ripple.", "mean.", "service_rate."}) {
        if (name.substr(0, prefix.size()) != prefix) continue;
        for (std::size_t k = 1; k <= n_outputs; ++k) {
            if (name.substr(prefix.size()) == std::to_string(k)) return true;
        }
    }
    return false;
}

struct SweepPoint {
    double param = 0.0;
    std::optional<double> value;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Transient simulator for single-inductor multiple-output converters "
                 "with a shared bootstrap gate driver",
                 "simo"};
    app.require_subcommand(1);

    std::string config_path, trace_path, spec_path, format = "table", param, metric;
    std::optional<double> t_end;
    double window = kDefaultWindow;
    std::size_t n_outputs = 0;
    double from = 0.0, to = 0.0;
    std::size_t steps = 0;

    auto* run = app.add_subcommand("run", "Simulate a configuration and export the trace as CSV");
    run->add_option("--config", config_path, "Configuration file")->required();
    run->add_option("--trace", trace_path, "Output CSV path")->required();
    run->add_option("--t-end", t_end, "Override sim.t_end (seconds)");

    auto* analyze = app.add_subcommand("analyze", "Compute waveform metrics from a trace CSV");
    analyze->add_option("--trace", trace_path, "Trace CSV")->required();
    analyze->add_option("--window", window, "Trailing fraction of the run treated as steady state")
        ->check(CLI::Range(1e-9, 1.0));
    analyze->add_option("--spec", spec_path, "Configuration the trace was produced from");
    analyze->add_option("--format", format, "table or kv")->check(CLI::IsMember({"table", "kv"}));

    auto* cost = app.add_subcommand("cost", "Bootstrap capacitor and pad count, conventional vs shared");
    cost->add_option("--outputs", n_outputs, "Number of outputs")->required()->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep and tabulate one metric");
    sweep->add_option("--config", config_path, "Base configuration file")->required();
    sweep->add_option("--param", param, "Dotted key, e.g. output.1.r_on_each or output.*.r_on_each")
        ->required();
    sweep->add_option("--from", from, "First value")->required();
    sweep->add_option("--to", to, "Last value")->required();
    sweep->add_option("--steps", steps, "Number of points")->required()->check(CLI::PositiveNumber);
    sweep->add_option("--metric", metric, "Metric name, e.g. efficiency or ripple.1")->required();
    sweep->add_option("--window", window, "Steady-state window fraction")->check(CLI::Range(1e-9, 1.0));

    std::vector<const char*> argv;
    argv.push_back("simo");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        if (*run) {
            ConverterSpec spec = load_config(config_path);
            if (t_end) {
                spec.sim.t_end = *t_end;
                if (const auto v = validate(spec); !v.empty()) {
                    std::vector<Diagnostic> diags;
                    for (const auto& x : v) diags.push_back({0, x.path + ": " + x.message});
                    throw ConfigError(std::move(diags));
                }
            }
            const auto result = simulate(spec);
            const auto bytes = write_trace_csv(result.trace, trace_path);
            out << "wrote " << result.trace.size() << " samples (" << bytes << " bytes) to "
                << trace_path << "\n";
            out << format_metrics_table(compute_metrics(result));
            return kExitOk;
        }

        if (*analyze) {
            Trace trace = read_trace_csv(std::filesystem::path(trace_path));
            if (!spec_path.empty()) {
                trace.spec = load_config(spec_path);
                if (trace.spec->outputs.size() != trace.n_outputs()) {
                    err << "error: spec has " << trace.spec->outputs.size() << " outputs, trace has "
                        << trace.n_outputs() << '\n';
                    return kExitConfig;
                }
            }
            if (trace.empty()) {
                err << "error: trace has no samples\n";
                return kExitRuntime;
            }
            const Metrics m = compute_metrics(trace, window);
            out << (format == "kv" ? format_metrics_kv(m) : format_metrics_table(m));
            return kExitOk;
        }

        if (*cost) {
            out << format_cost_table(gate_drive_cost(n_outputs));
            return kExitOk;
        }

        if (*sweep) {
            const std::string base_text = read_file(config_path);
            ConfigDocument base = ConfigDocument::parse(base_text);
            const ConverterSpec base_spec = parse_config(base);
            if (!known_metric(metric, base_spec.outputs.size())) {
                err << "error: unknown metric '" << metric << "'\n";
                return kExitUsage;
            }

            std::vector<ConverterSpec> specs;
            std::vector<double> values;
            for (std::size_t i = 0; i < steps; ++i) {
                const double v =
                    steps == 1 ? from
                               : from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
                ConfigDocument doc = base;
                try {
                    doc.set(param, format_number(v));
                } catch (const std::invalid_argument& e) {
                    err << "error: " << e.what() << '\n';
                    return kExitUsage;
                }
                specs.push_back(parse_config(doc));
                values.push_back(v);
            }

            // Points run concurrently; each simulation owns its state.
            const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
            std::vector<SweepPoint> points(specs.size());
            for (std::size_t first = 0; first < specs.size(); first += workers) {
                std::vector<std::future<std::optional<double>>> batch;
                const std::size_t last = std::min(specs.size(), first + workers);
                for (std::size_t i = first; i < last; ++i) {
                    batch.push_back(std::async(std::launch::async, [&, i] {
                        return metric_value(compute_metrics(simulate(specs[i]), window), metric);
                    }));
                }
                for (std::size_t i = first; i < last; ++i) {
                    points[i] = {values[i], batch[i - first].get()};
                }
            }

            std::stable_sort(points.begin(), points.end(),
                             [](const SweepPoint& a, const SweepPoint& b) { return a.param < b.param; });
            out << std::left;
            out << param << '\t' << metric << '\n';
            for (const auto& p : points) {
                out << format_number(p.param) << '\t' << (p.value ? format_number(*p.value) : "n/a")
                    << '\n';
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        print_config_error(e, spec_path.empty() ? config_path : spec_path, err);
        return kExitConfig;
    } catch (const SimulationError& e) {
        err << "simulation aborted: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }

    err << app.help();
    return kExitUsage;
}

}  // namespace simo
