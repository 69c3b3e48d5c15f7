#include "simo/cli_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace simo {

namespace {

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::string msg = "configuration error";
    for (const auto& d : diags) {
        msg += "\n  ";
        if (d.line > 0) msg += "line " + std::to_string(d.line) + ": ";
        msg += d.message;
    }
    return msg;
}

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::optional<double> parse_real(std::string_view s) {
    double v = 0.0;
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return v;
}

std::optional<std::size_t> parse_count(std::string_view s) {
    std::size_t v = 0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
    return v;
}

/// Index k of an "output.<k>" section name, or nullopt.
std::optional<std::size_t> output_section_index(std::string_view name) {
    constexpr std::string_view prefix = "output.";
    if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto k = parse_count(name.substr(prefix.size()));
    if (!k || *k == 0) return std::nullopt;
    return k;
}

using Setter = std::function<std::optional<std::string>(ConverterSpec&, std::size_t, std::string_view)>;
using Getter = std::function<std::string(const ConverterSpec&, std::size_t)>;

struct Field {
    std::string key;
    std::string path;  // spec path used by validate(), "{}" stands for the output label
    std::optional<std::string> fallback;
    Setter set;
    Getter get;
};

template <typename Ref>
Field real_field(std::string key, std::string path, std::optional<double> fallback, Ref ref) {
    Field f;
    f.key = std::move(key);
    f.path = std::move(path);
    if (fallback) f.fallback = format_number(*fallback);
    f.set = [ref](ConverterSpec& s, std::size_t j, std::string_view text) -> std::optional<std::string> {
        const auto v = parse_real(text);
        if (!v) return "not a number: '" + std::string(text) + "'";
        ref(s, j) = *v;
        return std::nullopt;
    };
    f.get = [ref](const ConverterSpec& s, std::size_t j) {
        ConverterSpec copy = s;
        return format_number(ref(copy, j));
    };
    return f;
}

#define SIMO_REF(expr) [](ConverterSpec& s, [[maybe_unused]] std::size_t j) -> double& { return expr; }

std::vector<Field> fields_for(std::string_view section) {
    std::vector<Field> f;
    if (section == "input") {
        f.push_back(real_field("v_in", "v_in", std::nullopt, SIMO_REF(s.v_in)));
    } else if (section == "inductor") {
        f.push_back(real_field("l", "inductor.l", std::nullopt, SIMO_REF(s.inductor.l)));
        f.push_back(real_field("r_series", "inductor.r_series", 0.0, SIMO_REF(s.inductor.r_series)));
        f.push_back(real_field("r_sp", "switch_sp.r_on", std::nullopt, SIMO_REF(s.switch_sp.r_on)));
        f.push_back(real_field("r_sy", "switch_sy.r_on", std::nullopt, SIMO_REF(s.switch_sy.r_on)));
    } else if (section == "bootstrap") {
        f.push_back(real_field("c_boot", "bootstrap.c_boot", std::nullopt, SIMO_REF(s.bootstrap.c_boot)));
        f.push_back(real_field("v_drive", "bootstrap.v_drive", std::nullopt, SIMO_REF(s.bootstrap.v_drive)));
        f.push_back(real_field("diode_v_f", "bootstrap.d_b.v_f", std::nullopt, SIMO_REF(s.bootstrap.d_b.v_f)));
        f.push_back(real_field("diode_r_s", "bootstrap.d_b.r_s", 0.0, SIMO_REF(s.bootstrap.d_b.r_s)));
        f.push_back(real_field("r_charge", "bootstrap.r_charge", std::nullopt, SIMO_REF(s.bootstrap.r_charge)));
    } else if (section == "driver") {
        const DriverSpec d;
        f.push_back(real_field("r1", "driver.r1", d.r1, SIMO_REF(s.driver.r1)));
        f.push_back(real_field("r2", "driver.r2", d.r2, SIMO_REF(s.driver.r2)));
        f.push_back(real_field("v_gs_unit", "driver.v_gs_unit", d.v_gs_unit, SIMO_REF(s.driver.v_gs_unit)));
    } else if (section == "controller") {
        f.push_back(real_field("i_pk", "controller.i_pk", std::nullopt, SIMO_REF(s.controller.i_pk)));
        f.push_back(real_field("t_on_max", "controller.t_on_max", std::nullopt, SIMO_REF(s.controller.t_on_max)));
        f.push_back(real_field("t_deliver_max", "controller.t_deliver_max", std::nullopt,
                               SIMO_REF(s.controller.t_deliver_max)));
        Field start;
        start.key = "start_index";
        start.path = "controller.start_index";
        start.fallback = "1";
        start.set = [](ConverterSpec& s, std::size_t, std::string_view text) -> std::optional<std::string> {
            const auto v = parse_count(text);
            if (!v || *v == 0) return "start_index must be an output number >= 1";
            s.controller.start_index = *v - 1;
            return std::nullopt;
        };
        start.get = [](const ConverterSpec& s, std::size_t) {
            return std::to_string(s.controller.start_index + 1);
        };
        f.push_back(std::move(start));
        Field arb;
        arb.key = "arbitration";
        arb.path = "controller.arbitration";
        arb.fallback = "round_robin";
        arb.set = [](ConverterSpec& s, std::size_t, std::string_view text) -> std::optional<std::string> {
            if (text == "round_robin") s.controller.arbitration = Arbitration::RoundRobin;
            else if (text == "priority") s.controller.arbitration = Arbitration::Priority;
            else return "arbitration must be round_robin or priority";
            return std::nullopt;
        };
        arb.get = [](const ConverterSpec& s, std::size_t) -> std::string {
            return s.controller.arbitration == Arbitration::Priority ? "priority" : "round_robin";
        };
        f.push_back(std::move(arb));
    } else if (section == "sim") {
        f.push_back(real_field("dt", "sim.dt", 1e-9, SIMO_REF(s.sim.dt)));
        f.push_back(real_field("t_end", "sim.t_end", std::nullopt, SIMO_REF(s.sim.t_end)));
        Field every;
        every.key = "sample_every";
        every.path = "sim.sample_every";
        every.fallback = "1";
        every.set = [](ConverterSpec& s, std::size_t, std::string_view text) -> std::optional<std::string> {
            const auto v = parse_count(text);
            if (!v) return "sample_every must be a non-negative integer";
            s.sim.sample_every = *v;
            return std::nullopt;
        };
        every.get = [](const ConverterSpec& s, std::size_t) { return std::to_string(s.sim.sample_every); };
        f.push_back(std::move(every));
    } else if (output_section_index(section)) {
        const std::string p = "outputs[{}].";
        f.push_back(real_field("target", p + "target", std::nullopt, SIMO_REF(s.outputs[j].target)));
        f.push_back(real_field("c_out", p + "c_out", std::nullopt, SIMO_REF(s.outputs[j].c_out)));
        f.push_back(real_field("load", p + "load.i_load", std::nullopt, SIMO_REF(s.outputs[j].load.i_load)));
        f.push_back(real_field("load_floor", p + "load.v_floor", 0.1, SIMO_REF(s.outputs[j].load.v_floor)));
        f.push_back(real_field("r_on_each", p + "r_on_each", std::nullopt, SIMO_REF(s.outputs[j].r_on_each)));
        f.push_back(real_field("c_gate", p + "c_gate", std::nullopt, SIMO_REF(s.outputs[j].c_gate)));
        f.push_back(real_field("diode_v_f", p + "d_j.v_f", std::nullopt, SIMO_REF(s.outputs[j].d_j.v_f)));
        f.push_back(real_field("diode_r_s", p + "d_j.r_s", 0.0, SIMO_REF(s.outputs[j].d_j.r_s)));
        f.push_back(real_field("hysteresis", p + "hysteresis", std::nullopt, SIMO_REF(s.outputs[j].hysteresis)));
        f.push_back(real_field("v_th", p + "v_th", 1.0, SIMO_REF(s.outputs[j].v_th)));
    }
    return f;
}

#undef SIMO_REF

const std::vector<std::string>& fixed_sections() {
    static const std::vector<std::string> names = {"input", "inductor", "bootstrap", "driver",
                                                   "controller", "sim"};
    return names;
}

bool section_optional(std::string_view name) { return name == "driver"; }

std::string resolve_path(const std::string& path, std::size_t j) {
    std::string out = path;
    const auto pos = out.find("{}");
    if (pos != std::string::npos) out.replace(pos, 2, std::to_string(j + 1));
    return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_diagnostics(diagnostics)), diags_(std::move(diagnostics)) {}

ConfigDocument ConfigDocument::parse(std::string_view text) {
    ConfigDocument doc;
    std::vector<Diagnostic> errors;
    std::map<std::string, std::size_t> seen_sections;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto comment = line.find_first_of("#;");
        if (comment != std::string_view::npos) line = line.substr(0, comment);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back({line_no, "malformed section header"});
                continue;
            }
            const std::string name(trim(line.substr(1, line.size() - 2)));
            if (name.empty()) {
                errors.push_back({line_no, "empty section name"});
                continue;
            }
            if (const auto it = seen_sections.find(name); it != seen_sections.end()) {
                errors.push_back({line_no, "duplicate section [" + name + "] (first at line " +
                                               std::to_string(it->second) + ")"});
                // Keep parsing into a detached section so later lines are still checked.
                doc.sections.push_back({"", line_no, {}});
                continue;
            }
            seen_sections.emplace(name, line_no);
            doc.sections.push_back({name, line_no, {}});
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            errors.push_back({line_no, "expected 'key = value'"});
            continue;
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty() || value.empty()) {
            errors.push_back({line_no, "expected 'key = value'"});
            continue;
        }
        if (doc.sections.empty()) {
            errors.push_back({line_no, "key '" + key + "' outside any section"});
            continue;
        }
        auto& sec = doc.sections.back();
        const auto dup = std::find_if(sec.entries.begin(), sec.entries.end(),
                                      [&](const Entry& e) { return e.key == key; });
        if (dup != sec.entries.end()) {
            errors.push_back({line_no, "duplicate key '" + key + "' (first at line " +
                                           std::to_string(dup->line) + ")"});
            continue;
        }
        sec.entries.push_back({key, value, line_no});
    }

    // Drop placeholders created for duplicate sections.
    std::erase_if(doc.sections, [](const Section& s) { return s.name.empty(); });
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return doc;
}

void ConfigDocument::set(std::string_view dotted_key, const std::string& value) {
    const auto dot = dotted_key.rfind('.');
    if (dot == std::string_view::npos || dot == 0 || dot + 1 == dotted_key.size()) {
        throw std::invalid_argument("parameter must look like section.key: " + std::string(dotted_key));
    }
    const std::string section(dotted_key.substr(0, dot));
    const std::string key(dotted_key.substr(dot + 1));

    bool matched = false;
    for (auto& sec : sections) {
        const bool hit = section == "output.*" ? output_section_index(sec.name).has_value()
                                               : sec.name == section;
        if (!hit) continue;
        matched = true;
        auto it = std::find_if(sec.entries.begin(), sec.entries.end(),
                               [&](const Entry& e) { return e.key == key; });
        if (it != sec.entries.end()) it->value = value;
        else sec.entries.push_back({key, value, 0});
    }
    if (!matched) throw std::invalid_argument("no section [" + section + "] in configuration");
}

std::string ConfigDocument::render() const {
    std::string out;
    for (const auto& sec : sections) {
        if (!out.empty()) out += '\n';
        out += "[" + sec.name + "]\n";
        for (const auto& e : sec.entries) out += e.key + " = " + e.value + "\n";
    }
    return out;
}

ConverterSpec parse_config(const ConfigDocument& doc) {
    std::vector<Diagnostic> errors;
    ConverterSpec spec;
    std::map<std::string, std::size_t> line_of_path;

    // Output sections must be output.1 .. output.N with no gaps.
    std::map<std::size_t, const ConfigDocument::Section*> outputs;
    for (const auto& sec : doc.sections) {
        if (const auto k = output_section_index(sec.name)) {
            outputs.emplace(*k, &sec);
        } else if (std::find(fixed_sections().begin(), fixed_sections().end(), sec.name) ==
                   fixed_sections().end()) {
            errors.push_back({sec.line, "unknown section [" + sec.name + "]"});
        }
    }
    std::size_t expected = 1;
    for (const auto& [k, sec] : outputs) {
        if (k != expected) {
            errors.push_back({sec->line, "non-contiguous output sections: found [output." +
                                             std::to_string(k) + "] but [output." +
                                             std::to_string(expected) + "] is missing"});
            break;
        }
        ++expected;
    }
    if (outputs.empty()) errors.push_back({0, "no [output.<k>] sections"});
    if (!errors.empty()) throw ConfigError(std::move(errors));

    spec.outputs.resize(outputs.size());

    auto apply_section = [&](std::string_view name, const ConfigDocument::Section* sec,
                             std::size_t j) {
        const auto fields = fields_for(name);
        std::set<std::string> used;
        for (const auto& field : fields) {
            const ConfigDocument::Entry* entry = nullptr;
            if (sec != nullptr) {
                for (const auto& e : sec->entries) {
                    if (e.key == field.key) entry = &e;
                }
            }
            const std::size_t line = entry ? entry->line : (sec ? sec->line : 0);
            std::string value;
            if (entry) {
                value = entry->value;
                used.insert(field.key);
            } else if (field.fallback) {
                value = *field.fallback;
            } else {
                errors.push_back({line, "missing key '" + field.key + "' in [" + std::string(name) + "]"});
                continue;
            }
            if (auto err = field.set(spec, j, value)) {
                errors.push_back({line, std::string(name) + "." + field.key + ": " + *err});
            }
            line_of_path[resolve_path(field.path, j)] = line;
        }
        if (sec != nullptr) {
            for (const auto& e : sec->entries) {
                if (!used.count(e.key)) {
                    errors.push_back({e.line, "unknown key '" + e.key + "' in [" + std::string(name) + "]"});
                }
            }
        }
    };

    for (const auto& name : fixed_sections()) {
        const auto it = std::find_if(doc.sections.begin(), doc.sections.end(),
                                     [&](const auto& s) { return s.name == name; });
        const ConfigDocument::Section* sec = it == doc.sections.end() ? nullptr : &*it;
        if (sec == nullptr && !section_optional(name)) {
            errors.push_back({0, "missing section [" + name + "]"});
            continue;
        }
        apply_section(name, sec, 0);
    }
    for (const auto& [k, sec] : outputs) apply_section(sec->name, sec, k - 1);

    if (errors.empty()) {
        for (const auto& v : validate(spec)) {
            const auto it = line_of_path.find(v.path);
            errors.push_back({it == line_of_path.end() ? 0 : it->second, v.path + ": " + v.message});
        }
    }
    if (!errors.empty()) throw ConfigError(std::move(errors));
    return spec;
}

ConverterSpec parse_config(std::string_view text) {
    return parse_config(ConfigDocument::parse(text));
}

ConverterSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({{0, "cannot open " + path.string()}});
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string render_config(const ConverterSpec& spec) {
    std::string out;
    auto emit = [&](const std::string& name, std::size_t j) {
        if (!out.empty()) out += '\n';
        out += "[" + name + "]\n";
        for (const auto& f : fields_for(name)) out += f.key + " = " + f.get(spec, j) + "\n";
    };
    for (const auto& name : fixed_sections()) emit(name, 0);
    for (std::size_t j = 0; j < spec.outputs.size(); ++j) emit("output." + std::to_string(j + 1), j);
    return out;
}

}  // namespace simo
