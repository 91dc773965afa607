#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "gravduct/background.hpp"
#include "gravduct/driver.hpp"
#include "gravduct/grid.hpp"

namespace gravduct {

inline constexpr const char* kSummarySchema = "gravduct.summary/1";

/// 64-bit FNV-1a digest, as 16 hex digits.
std::string fnv1a_hex(const std::string& bytes);

/// Columns x1,x2,value; one row per node, i outer.
void write_field_csv(const std::string& path, const ScalarField& field);

/// Columns x1,x2 and one column per field, headed by the field names.
void write_fields_csv(const std::string& path, const std::vector<const ScalarField*>& fields);

/// Columns x1,rho,u,p,G,Phi0.
void write_background_csv(const std::string& path, const BackgroundSolution& bg);

/// Columns rho,G,level.
void write_phase_csv(const std::string& path, const std::vector<PhasePoint>& points);

/// One line per iteration: index, difference, sup|phi|, sup|Psi|, min psi_x2, relaxation.
void write_iteration_log(const std::string& path, const IterationLog& log);

void write_json(const std::string& path, const nlohmann::json& doc);

nlohmann::json grid_json(const Grid& grid);
nlohmann::json residuals_json(const ResidualReport& r);
nlohmann::json iteration_json(const IterationLog& log);

}  // namespace gravduct
