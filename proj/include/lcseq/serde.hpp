#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lcseq/lcmle.hpp"
#include "lcseq/simlab.hpp"

namespace lcseq {

// {"knots":[...],"phi":[...],"loglik":...,"gap":...,"iterations":...,"converged":...}
std::string fit_report_to_json(const MleFitReport& report);

// Parses the experiment config; unknown fields are rejected and error
// messages carry the JSON field path.
ExperimentConfig parse_experiment_config(const std::string& json_text);

// One decimal per line; '#' starts a comment; blank lines skipped.
// Throws InputError naming the 1-based line number on a malformed line.
std::vector<double> parse_stream(std::istream& is);

} // namespace lcseq
