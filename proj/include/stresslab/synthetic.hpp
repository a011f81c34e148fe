#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stresslab/ingest.hpp"

namespace stresslab::synthetic {

/// Thirteen ETF-like price series on business days 2000-01-03..2025-12-31 from a
/// three-regime factor model. Crisis regimes are pinned to late 2008 - early 2009 and
/// Feb - Apr 2020. XLRE starts on 2015-10-08.
ingest::PricePanel generate_prices(std::uint64_t seed);

/// G7 baselines in the WEO layout.
std::vector<ingest::CountryBaseline> generate_weo();

/// 30-80 raw headlines per country in September 2025, with some duplicates.
std::map<std::string, std::vector<ingest::RawHeadline>> generate_headlines(const std::vector<std::string>& countries,
                                                                          std::uint64_t seed);

Json headlines_to_json(const std::map<std::string, std::vector<ingest::RawHeadline>>& h);
std::map<std::string, std::vector<ingest::RawHeadline>> headlines_from_json(const Json& j);

}  // namespace stresslab::synthetic
