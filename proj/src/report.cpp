#include "simo/cli_io.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

namespace simo {

namespace {

// Human tables: 4 significant digits with a unit.
std::string human(double v, const char* unit) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g %s", v, unit);
    return buf;
}

void row(std::ostringstream& out, const std::string& label, const std::string& value) {
    out << "  " << std::left << std::setw(28) << label << value << '\n';
}

std::optional<std::size_t> output_suffix(std::string_view name, std::string_view prefix) {
    if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
    const auto rest = name.substr(prefix.size());
    std::size_t k = 0;
    for (const char c : rest) {
        if (c < '0' || c > '9') return std::nullopt;
        k = k * 10 + static_cast<std::size_t>(c - '0');
    }
    if (rest.empty() || k == 0) return std::nullopt;
    return k - 1;
}

}  // namespace

std::string format_metrics_table(const Metrics& m) {
    std::ostringstream out;
    out << "Metrics (trailing " << human(m.window * 100.0, "%") << " of run)\n";
    for (std::size_t j = 0; j < m.outputs.size(); ++j) {
        const auto& r = m.outputs[j];
        std::string label = "output " + std::to_string(j + 1);
        std::string value = "mean " + human(r.mean, "V") + ", ripple " + human(r.value * 1e3, "mV");
        if (j < m.service_rate.size()) value += ", service " + human(m.service_rate[j] * 1e-3, "kHz");
        if (r.regulated && !*r.regulated) value += "  [NOT REGULATED]";
        row(out, label, value);
    }
    row(out, "peak inductor current", human(m.i_l_peak * 1e3, "mA"));
    row(out, "efficiency (loss ledger)", m.efficiency ? human(*m.efficiency * 100.0, "%") : "n/a");
    row(out, "efficiency (out / in)",
        m.input_efficiency ? human(*m.input_efficiency * 100.0, "%") : "n/a");
    if (m.losses) {
        row(out, "conduction loss", human(m.losses->e_cond * 1e6, "uJ"));
        row(out, "diode loss", human(m.losses->e_diode * 1e6, "uJ"));
        row(out, "gate-charge loss", human(m.losses->e_gate * 1e6, "uJ"));
        row(out, "bootstrap recharge loss", human(m.losses->e_boot_recharge * 1e6, "uJ"));
    }
    if (m.tracking) {
        row(out, "tracking deviation (max)", human(m.tracking->max_deviation * 1e3, "mV"));
        row(out, "tracking bound holds", m.tracking->bound_holds ? "yes" : "NO");
        row(out, "bootstrap droop (max)", human(m.tracking->droop * 1e3, "mV"));
    }
    return out.str();
}

std::string format_metrics_kv(const Metrics& m) {
    std::ostringstream out;
    auto kv = [&](const std::string& k, double v) { out << k << '=' << format_number(v) << '\n'; };
    out << "window=" << format_number(m.window) << '\n';
    for (std::size_t j = 0; j < m.outputs.size(); ++j) {
        const std::string k = std::to_string(j + 1);
        kv("ripple." + k, m.outputs[j].value);
        kv("mean." + k, m.outputs[j].mean);
        if (m.outputs[j].regulated) out << "regulated." << k << '=' << (*m.outputs[j].regulated ? 1 : 0) << '\n';
        if (j < m.service_rate.size()) kv("service_rate." + k, m.service_rate[j]);
    }
    kv("peak_current", m.i_l_peak);
    if (m.efficiency) kv("efficiency", *m.efficiency);
    if (m.input_efficiency) kv("input_efficiency", *m.input_efficiency);
    if (m.losses) {
        kv("e_in", m.losses->e_in);
        kv("e_drive", m.losses->e_drive);
        kv("e_cond", m.losses->e_cond);
        kv("e_diode", m.losses->e_diode);
        kv("e_gate", m.losses->e_gate);
        kv("e_boot_recharge", m.losses->e_boot_recharge);
    }
    if (m.tracking) {
        kv("tracking_error", m.tracking->max_deviation);
        kv("droop", m.tracking->droop);
    }
    return out.str();
}

std::string format_cost_table(const GateDriveCost& c) {
    std::ostringstream out;
    out << "Gate-drive cost for " << c.n << " output" << (c.n == 1 ? "" : "s") << "\n";
    out << "  " << std::left << std::setw(16) << "" << std::right << std::setw(14)
        << "bootstrap caps" << std::setw(8) << "pads" << '\n';
    out << "  " << std::left << std::setw(16) << "conventional" << std::right << std::setw(14)
        << c.conventional.caps << std::setw(8) << c.conventional.pads << '\n';
    out << "  " << std::left << std::setw(16) << "shared" << std::right << std::setw(14)
        << c.proposed.caps << std::setw(8) << c.proposed.pads << '\n';
    out << "  pads saved: " << c.pads_saved << ", off-chip capacitor ratio: "
        << format_number(c.offchip_cap_ratio) << '\n';
    return out.str();
}

std::optional<double> metric_value(const Metrics& m, std::string_view name) {
    if (name == "efficiency") return m.efficiency;
    if (name == "input_efficiency") return m.input_efficiency;
    if (name == "peak_current") return m.i_l_peak;
    if (name == "tracking_error") {
        return m.tracking ? std::optional(m.tracking->max_deviation) : std::nullopt;
    }
    if (name == "droop") return m.tracking ? std::optional(m.tracking->droop) : std::nullopt;
    if (const auto j = output_suffix(name, "ripple."); j && *j < m.outputs.size()) {
        return m.outputs[*j].value;
    }
    if (const auto j = output_suffix(name, "mean."); j && *j < m.outputs.size()) {
        return m.outputs[*j].mean;
    }
    if (const auto j = output_suffix(name, "service_rate."); j && *j < m.service_rate.size()) {
        return m.service_rate[*j];
    }
    return std::nullopt;
}

}  // namespace simo
