#ifndef POISLIN_IO_HPP
#define POISLIN_IO_HPP

// Serialization: JSON for values and reports, CSV for histories and
// measurement tables. Coordinate and basis indices are 1-based on disk.

#include <json.hpp>
#include <string>
#include <vector>

#include "poislin/cohomology.hpp"
#include "poislin/jet.hpp"
#include "poislin/liealg.hpp"
#include "poislin/nashmoser.hpp"
#include "poislin/norms.hpp"
#include "poislin/stability.hpp"

namespace poislin {

nlohmann::json to_json(const PolyMv& w);
PolyMv polymv_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LieAlgebraSpec& g);
LieAlgebraSpec liealg_from_json(const nlohmann::json& j);

nlohmann::json to_json(const FoliationData& data);
FoliationData foliation_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StabilityReport& rep);

nlohmann::json to_json(const Diffeo& phi);
nlohmann::json to_json(const RunResult& res);

nlohmann::json diagnostics_json(const std::vector<SliceDiagnostic>& diags);

// CSV with columns k, r_k, t_k, norm_s, norm_p, lowest_degree, a_k, b_k,
// jacobi_defect.
std::string history_csv(const std::vector<StepRecord>& history);

// CSV with columns kind, sample_id, n, r, lhs, rhs, ratio; skipped samples
// are omitted.
std::string tame_csv(const std::vector<TameRow>& rows);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace poislin

#endif
