#include "simo/cli_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace simo {

namespace {

// 12 significant digits: round-trips sampled values to ~1e-12 relative.
void append_number(std::string& out, double v) {
    std::array<char, 40> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                         std::chars_format::general, 12);
    out.append(buf.data(), ec == std::errc() ? ptr : buf.data());
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        cells.push_back(line.substr(pos, comma == std::string_view::npos ? line.npos : comma - pos));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return cells;
}

double cell_real(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        throw std::runtime_error("trace line " + std::to_string(line) + ": bad number '" +
                                 std::string(s) + "'");
    }
    return v;
}

}  // namespace

std::string format_number(double v) {
    std::array<char, 40> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), ec == std::errc() ? ptr : buf.data()};
}

std::size_t write_trace_csv(const Trace& trace, std::ostream& out) {
    std::string header = "time,i_l,v_l_plus,v_boot_top,v_boot,phase,selected";
    for (std::size_t j = 0; j < trace.n_outputs(); ++j) header += ",v_out_" + std::to_string(j + 1);
    header += '\n';
    out << header;
    std::size_t bytes = header.size();

    std::string row;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const Sample& s = trace.sample(i);
        row.clear();
        append_number(row, s.t);
        row += ',';
        append_number(row, s.i_l);
        row += ',';
        append_number(row, s.v_l_plus);
        row += ',';
        append_number(row, s.v_boot_top);
        row += ',';
        append_number(row, s.v_boot);
        row += ',';
        row += s.phase;
        row += ',';
        row += std::to_string(s.selected < 0 ? -1 : s.selected + 1);
        for (const double v : trace.v_out(i)) {
            row += ',';
            append_number(row, v);
        }
        row += '\n';
        out << row;
        bytes += row.size();
    }
    return bytes;
}

std::size_t write_trace_csv(const Trace& trace, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    const std::size_t bytes = write_trace_csv(trace, out);
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
    return bytes;
}

Trace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("trace: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto head = split_csv(line);
    static constexpr std::array<std::string_view, 7> fixed = {
        "time", "i_l", "v_l_plus", "v_boot_top", "v_boot", "phase", "selected"};
    if (head.size() < fixed.size()) throw std::runtime_error("trace: header too short");
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (head[i] != fixed[i]) throw std::runtime_error("trace: unexpected header column '" +
                                                          std::string(head[i]) + "'");
    }
    const std::size_t n = head.size() - fixed.size();
    for (std::size_t j = 0; j < n; ++j) {
        if (head[fixed.size() + j] != "v_out_" + std::to_string(j + 1)) {
            throw std::runtime_error("trace: unexpected header column '" +
                                     std::string(head[fixed.size() + j]) + "'");
        }
    }

    Trace trace(n);
    std::vector<double> v_out(n);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != head.size()) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(head.size()) + " columns");
        }
        Sample s;
        s.t = cell_real(cells[0], line_no);
        s.i_l = cell_real(cells[1], line_no);
        s.v_l_plus = cell_real(cells[2], line_no);
        s.v_boot_top = cell_real(cells[3], line_no);
        s.v_boot = cell_real(cells[4], line_no);
        if (cells[5].size() != 1 || cells[5].find_first_of("CDI") != 0) {
            throw std::runtime_error("trace line " + std::to_string(line_no) + ": bad phase");
        }
        s.phase = cells[5][0];
        const int sel = static_cast<int>(cell_real(cells[6], line_no));
        s.selected = sel < 0 ? -1 : sel - 1;
        for (std::size_t j = 0; j < n; ++j) v_out[j] = cell_real(cells[fixed.size() + j], line_no);
        trace.append(s, v_out);
    }
    return trace;
}

Trace read_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return read_trace_csv(in);
}

}  // namespace simo
