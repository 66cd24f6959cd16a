#pragma once

// Deterministic CSV emission and parsing.  Doubles are printed with
// std::to_chars (shortest round-trip form), so identical values always
// serialize to identical bytes; no locale, no wall-clock, no paths in the
// output.  Metadata travels in leading `# key = value` lines.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "haptofv/diagnostics.hpp"
#include "haptofv/grid.hpp"

namespace haptofv {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_int(std::int64_t v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline void write_metadata(std::ostream& out, const Metadata& meta) {
    for (const auto& [key, value] : meta)
        out << "# " << key << " = " << value << "\n";
}

inline double parse_csv_double(const std::string& field,
                               const std::string& context) {
    const char* begin = field.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (field.empty() || end != begin + field.size())
        throw std::runtime_error(context + ": malformed number `" + field +
                                 "`");
    return v;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string item;
    std::istringstream in(line);
    while (std::getline(in, item, ',')) fields.push_back(item);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    return fields;
}

struct CsvBody {
    Metadata metadata;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline CsvBody read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open CSV: " + path);
    CsvBody body;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::size_t eq = line.find('=');
            if (eq != std::string::npos) {
                std::string key = line.substr(1, eq - 1);
                std::string value = line.substr(eq + 1);
                auto trim = [](std::string& s) {
                    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
                        s.erase(s.begin());
                    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
                        s.pop_back();
                };
                trim(key);
                trim(value);
                body.metadata.emplace_back(key, value);
            }
            continue;
        }
        if (!have_header) {
            body.header = split_csv_line(line);
            have_header = true;
        } else {
            body.rows.push_back(split_csv_line(line));
        }
    }
    return body;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    return out;
}

}  // namespace detail

// ---- field snapshots -------------------------------------------------------

inline void write_fields_csv(const std::string& path, const GridFunction& psi,
                             const GridFunction& phi, const Metadata& meta) {
    check_same_grid(psi, phi, "write_fields_csv");
    const Grid& g = psi.grid();
    auto out = detail::open_out(path);
    write_metadata(out, meta);
    out << (g.dim() == 1 ? "x,psi,phi" : "x,y,psi,phi") << "\n";
    for (index_t c = 0; c < g.cell_count(); ++c) {
        if (g.dim() == 1) {
            out << format_double(g.center(0, c));
        } else {
            const auto [i, j] = g.unflatten(c);
            out << format_double(g.center(0, i)) << ','
                << format_double(g.center(1, j));
        }
        out << ',' << format_double(psi[c]) << ',' << format_double(phi[c])
            << "\n";
    }
}

// Reads psi and phi columns of a fields CSV onto the given grid (cell count
// must match; coordinates are not re-derived).
inline std::pair<GridFunction, GridFunction> read_fields_csv(
    const std::string& path, const Grid& grid) {
    const auto body = detail::read_csv(path);
    const std::size_t coord_cols = grid.dim() == 1 ? 1 : 2;
    if (body.header.size() != coord_cols + 2)
        throw std::runtime_error(path + ": expected " +
                                 std::to_string(coord_cols + 2) +
                                 " columns for a " +
                                 std::to_string(grid.dim()) + "D grid");
    if (static_cast<index_t>(body.rows.size()) != grid.cell_count())
        throw std::runtime_error(
            path + ": row count " + std::to_string(body.rows.size()) +
            " does not match grid cell count " +
            std::to_string(grid.cell_count()));
    GridFunction psi(grid), phi(grid);
    for (std::size_t r = 0; r < body.rows.size(); ++r) {
        const auto& row = body.rows[r];
        if (row.size() != coord_cols + 2)
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                                     " has " + std::to_string(row.size()) +
                                     " fields");
        psi[static_cast<index_t>(r)] =
            parse_csv_double(row[coord_cols], path + " psi");
        phi[static_cast<index_t>(r)] =
            parse_csv_double(row[coord_cols + 1], path + " phi");
    }
    return {std::move(psi), std::move(phi)};
}

// ---- diagnostics records ---------------------------------------------------

inline void write_diagnostics_csv(const std::string& path,
                                  const DiagnosticsRecord& record,
                                  const Metadata& meta) {
    auto out = detail::open_out(path);
    write_metadata(out, meta);
    const auto& names = diagnostics_columns();
    for (std::size_t k = 0; k < names.size(); ++k)
        out << (k ? "," : "") << names[k];
    out << "\n";
    for (const auto& row : record.rows) {
        const auto values = numeric_fields(row);
        for (const double v : values) out << format_double(v) << ',';
        out << format_int(row.floored_cells) << "\n";
    }
}

inline DiagnosticsRecord read_diagnostics_csv(const std::string& path) {
    const auto body = detail::read_csv(path);
    const auto& names = diagnostics_columns();
    if (body.header.size() != names.size())
        throw std::runtime_error(path + ": expected " +
                                 std::to_string(names.size()) +
                                 " diagnostics columns, found " +
                                 std::to_string(body.header.size()));
    for (std::size_t k = 0; k < names.size(); ++k)
        if (body.header[k] != names[k])
            throw std::runtime_error(path + ": column " + std::to_string(k) +
                                     " is `" + body.header[k] +
                                     "`, expected `" + names[k] + "`");
    DiagnosticsRecord record;
    for (std::size_t r = 0; r < body.rows.size(); ++r) {
        const auto& fields = body.rows[r];
        if (fields.size() != names.size())
            throw std::runtime_error(path + ": row " + std::to_string(r + 1) +
                                     " has " + std::to_string(fields.size()) +
                                     " fields");
        DiagnosticsRow row;
        const std::string ctx = path + " row " + std::to_string(r + 1);
        std::size_t k = 0;
        row.time = parse_csv_double(fields[k++], ctx);
        row.mass = parse_csv_double(fields[k++], ctx);
        row.l2 = parse_csv_double(fields[k++], ctx);
        row.l3 = parse_csv_double(fields[k++], ctx);
        row.second_moment = parse_csv_double(fields[k++], ctx);
        row.entropy_abs = parse_csv_double(fields[k++], ctx);
        row.energy = parse_csv_double(fields[k++], ctx);
        row.dissipation = parse_csv_double(fields[k++], ctx);
        row.grad_sqrt_phi = parse_csv_double(fields[k++], ctx);
        row.w_grad_psi = parse_csv_double(fields[k++], ctx);
        row.psi_grad_sqrt_phi = parse_csv_double(fields[k++], ctx);
        row.full_w_grad_psi = parse_csv_double(fields[k++], ctx);
        row.delta_dissipation = parse_csv_double(fields[k++], ctx);
        row.dt_sqrt_phi_l3 = parse_csv_double(fields[k++], ctx);
        row.compact_phi_grad_psi = parse_csv_double(fields[k++], ctx);
        row.compact_psi_grad_sqrt_phi = parse_csv_double(fields[k++], ctx);
        row.phi_max = parse_csv_double(fields[k++], ctx);
        row.phi_min = parse_csv_double(fields[k++], ctx);
        row.psi_min = parse_csv_double(fields[k++], ctx);
        row.boundary_tail = parse_csv_double(fields[k++], ctx);
        row.floored_cells =
            static_cast<std::int64_t>(parse_csv_double(fields[k++], ctx));
        record.append(row);
    }
    return record;
}

// ---- envelope reports ------------------------------------------------------

inline void write_envelopes_csv(const std::string& path,
                                const EnvelopeReport& report,
                                Metadata meta) {
    meta.emplace_back("samples", format_int(report.samples));
    meta.emplace_back("t_end", format_double(report.t_end));
    meta.emplace_back("eps_env", format_double(report.eps_env));
    meta.emplace_back("total_floored", format_int(report.total_floored));
    meta.emplace_back("max_boundary_tail",
                      format_double(report.max_boundary_tail));
    auto out = detail::open_out(path);
    write_metadata(out, meta);
    out << "check,pass,worst_margin,worst_time,observed,envelope\n";
    for (const auto& c : report.checks) {
        out << c.name << ',' << (c.pass ? "1" : "0") << ','
            << format_double(c.worst_margin) << ','
            << format_double(c.worst_time) << ',' << format_double(c.observed)
            << ',' << format_double(c.envelope) << "\n";
    }
}

}  // namespace haptofv
