#pragma once

#include "simo/analysis.hpp"
#include "simo/engine.hpp"
#include "simo/spec_model.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace simo {

struct Diagnostic {
    std::size_t line = 0;  // 1-based; 0 when no single line is responsible
    std::string message;
};

/// Parse or validation failure, carrying every problem found.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<Diagnostic> diagnostics);

    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

private:
    std::vector<Diagnostic> diags_;
};

/// Sectioned key/value text, syntax only. `[section]` headers, `key = value`
/// lines, `#` or `;` comments.
struct ConfigDocument {
    struct Entry {
        std::string key;
        std::string value;
        std::size_t line = 0;
    };
    struct Section {
        std::string name;
        std::size_t line = 0;
        std::vector<Entry> entries;
    };
    std::vector<Section> sections;

    /// Throws ConfigError on malformed lines, duplicate sections or duplicate keys.
    static ConfigDocument parse(std::string_view text);

    /// Overrides `section.key` (e.g. "controller.i_pk", "output.2.r_on_each").
    /// "output.*.key" applies to every output section. Missing entries are added.
    /// Throws std::invalid_argument if the section does not exist.
    void set(std::string_view dotted_key, const std::string& value);

    [[nodiscard]] std::string render() const;
};

/// Builds and validates a spec. Throws ConfigError listing every problem.
[[nodiscard]] ConverterSpec parse_config(std::string_view text);
[[nodiscard]] ConverterSpec parse_config(const ConfigDocument& doc);
[[nodiscard]] ConverterSpec load_config(const std::filesystem::path& path);

/// Config text that parses back to `spec` with identical numeric fields.
[[nodiscard]] std::string render_config(const ConverterSpec& spec);

/// Header `time,i_l,v_l_plus,v_boot_top,v_boot,phase,selected,v_out_1..v_out_N`,
/// one row per sample. `selected` is 1-based, -1 outside Deliver.
std::size_t write_trace_csv(const Trace& trace, std::ostream& out);
/// Throws std::runtime_error naming the path on write failure.
std::size_t write_trace_csv(const Trace& trace, const std::filesystem::path& path);

[[nodiscard]] Trace read_trace_csv(std::istream& in);
[[nodiscard]] Trace read_trace_csv(const std::filesystem::path& path);

/// Full-precision number formatting used in files and kv output.
[[nodiscard]] std::string format_number(double v);

[[nodiscard]] std::string format_metrics_table(const Metrics& m);
[[nodiscard]] std::string format_metrics_kv(const Metrics& m);
[[nodiscard]] std::string format_cost_table(const GateDriveCost& cost);

/// Named scalar from a metrics set: efficiency, input_efficiency, peak_current,
/// tracking_error, droop, ripple.<k>, mean.<k>, service_rate.<k> (k from 1).
[[nodiscard]] std::optional<double> metric_value(const Metrics& m, std::string_view name);

/// Command-line entry point. Exit codes: 0 success, 1 usage, 2 config error,
/// 3 runtime abort.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simo
