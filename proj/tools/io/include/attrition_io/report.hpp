#pragma once

#include "attrition/equilibrium.hpp"
#include "attrition/simulate.hpp"
#include "attrition_io/config.hpp"

#include <string>
#include <vector>

namespace attrition::io {

inline constexpr const char* report_schema = "attrition-report/1";

// finite numbers as numbers; infinities and NaN as the strings "inf", "-inf", "nan"
Json number(double x);

Json to_json(const ValidationReport& report);
Json to_json(const ThresholdSolution& solution);
Json to_json(const Strategy& strategy);
Json to_json(const StrategyProfile& profile);
Json to_json(const PureEquilibrium& eq);
Json to_json(const KappaResult& kappa);
Json to_json(const MixedEquilibrium& mixed);
Json to_json(const NonexistenceCertificate& cert);
Json to_json(const DeterministicReport& report);
Json to_json(const EquilibriumReport& report, const EquilibriumOptions& options);
Json to_json(const SimConfig& cfg);
Json to_json(const OutcomeSummary& summary);

void write_json(const std::string& path, const Json& doc);

// x,R1,R2,beta1,beta2,beta_prime1,beta_prime2,V1,V2 at n + 1 states of the window;
// x,V1,V2 when sigma = 0
void write_curves_csv(const std::string& path, const GameModel& model, const ThresholdPair& thresholds, int n);
// x,lambda1,lambda2 at n + 1 states from the window's lower end to `hi`
void write_hazards_csv(const std::string& path, const DiffusionSpec& spec, const StrategyProfile& profile, double hi,
                       int n);
// path,winner,exit_time,exit_state,payoff1,payoff2
void write_outcomes_csv(const std::string& path, const std::vector<GameOutcome>& outcomes);

}  // namespace attrition::io
