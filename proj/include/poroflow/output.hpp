/**
 * @file output.hpp
 * @brief Legacy ASCII VTK snapshots, CSV time series and the run manifest.
 *
 * Every number is printed with 9 significant digits ("%.9g") so that
 * identical runs give byte-identical files.
 */
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "poroflow/assembly.hpp"

namespace poroflow {

class OutputError : public std::runtime_error {
public:
    OutputError(const std::string& path, const std::string& what);
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

std::string format_number(double v);

struct VtkExtras {
    std::vector<std::pair<std::string, std::vector<double>>> point_scalars;
    std::vector<std::pair<std::string, std::vector<double>>> cell_scalars;
};

/// UNSTRUCTURED_GRID with point data u (vector), p and, for two-phase
/// states, S_n (S_n lives on node control volumes); cell data phi and v.
void write_vtk(const Mesh& mesh, const FieldState& state, const std::string& path,
               const VtkExtras& extras = {});

struct VtkArray {
    int components = 1;
    std::vector<std::string> tokens;  // numbers exactly as written
    std::vector<double> values;
};

struct VtkFile {
    int points = 0;
    int cells = 0;
    std::vector<std::string> point_tokens;
    std::map<std::string, VtkArray> point_data;
    std::map<std::string, VtkArray> cell_data;
};

/// Reads back files written by write_vtk.
VtkFile read_vtk(const std::string& path);

struct TimeseriesRow {
    double time = 0.0;
    std::string scheme;
    double tol = 0.0;
    int outer_iters = 0;
    int flow_solves = 0;
    int solid_solves = 0;
    double residual = 0.0;
    std::optional<double> error_u;
    std::optional<double> error_p;
    std::vector<std::optional<double>> extra;  // one per Timeseries::extra_columns
};

struct Timeseries {
    std::vector<std::string> extra_columns;
    std::vector<TimeseriesRow> rows;
};

inline const std::vector<std::string> timeseries_columns = {
    "time", "scheme", "tol", "outer_iters", "flow_solves", "solid_solves", "residual", "error_u", "error_p"};

void write_timeseries(const Timeseries& series, const std::string& path);

/// Generic CSV with numeric cells.
void write_table(const std::vector<std::string>& header,
                 const std::vector<std::vector<double>>& rows, const std::string& path);

struct Manifest {
    std::string scenario;
    std::string status;  // "ok" or an error description
    int exit_code = 0;
    std::string config_echo;
    std::string resolved;
    std::vector<std::string> files;
    std::vector<std::pair<std::string, std::string>> results;
};

void write_manifest(const Manifest& manifest, const std::string& path);

/// Creates the directory (and parents); OutputError on failure.
void ensure_directory(const std::string& dir);

}  // namespace poroflow
