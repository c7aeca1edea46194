#pragma once

#include "fbmerr/limit_constants.hpp"
#include "fbmerr/mc_stats.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace fbmerr {

inline constexpr int kReportSchema = 1;

nlohmann::json to_json(const Experiment& e);
nlohmann::json to_json(const McReport& report);
nlohmann::json to_json(const LimitConstants& c);

/// Pretty-printed JSON followed by a newline.
std::string dump(const nlohmann::json& j);

/// `h,n,t,rep,i,j,m_n,corrected`, one row per matrix entry of every kept record.
std::string samples_csv(const McReport& report);

/// Collects several reports under one document; pass is the conjunction.
nlohmann::json merge_reports(const std::vector<nlohmann::json>& reports);

}  // namespace fbmerr
