#pragma once

#include <json.hpp>

#include "had/bandwidth.hpp"
#include "had/linearity.hpp"
#include "had/qug.hpp"
#include "had/sim.hpp"
#include "had/twfe.hpp"
#include "had/was.hpp"

namespace had {

using Json = nlohmann::ordered_json;

/// Finite numbers as-is; NaN and infinities as null.
Json number(double v);

Json to_json(const BandwidthSelection& v);
Json to_json(const WasEstimate& v);
Json to_json(const QugReport& v);
Json to_json(const StuteReport& v);
Json to_json(const YatchewReport& v);
Json to_json(const TestReport& v);
Json to_json(const TwfeEstimate& v);
Json to_json(const WeightReport& v);
Json to_json(const CovariateTwfe& v);
Json to_json(const McResult& v);
Json to_json(const DgpSpec& v);

}  // namespace had
