#ifndef CKTX_SVG_PLOTS_HPP
#define CKTX_SVG_PLOTS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "cktx/suite.hpp"

namespace cktx {

// Renders the two summary charts from a results table:
//   ofpr_by_barrier.svg  - OFPR(pi_CK) per goal scenario across barriers,
//                          with Rand and P* reference bands
//   delta_ck_by_barrier.svg - net teacher value per goal scenario
// Barrier order on the x-axis follows first appearance in the rows.
// Returns the file names written. Throws on an empty or malformed table.
std::vector<std::string> emit_plots(const std::vector<ResultRow>& rows,
                                    const std::filesystem::path& out_dir);

std::vector<std::string> emit_plots_from_csv(const std::string& csv_text,
                                             const std::filesystem::path& out_dir);

} // namespace cktx

#endif
