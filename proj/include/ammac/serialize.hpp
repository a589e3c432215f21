#ifndef AMMAC_SERIALIZE_HPP
#define AMMAC_SERIALIZE_HPP

#include <string>

#include <json.hpp>

#include "ammac/types.hpp"

namespace ammac {

using ordered_json = nlohmann::ordered_json;

// Field names are part of the file-format contract:
//   ChannelParams   {"a", "sigma2", "P"}
//   RadialPmf       {"points": [[r, p], ...]}
//   BdDistribution  {"kind": "points"|"circles",
//                    "points": [[re, im, q], ...] | [[rho, q], ...]}
ordered_json to_json(const ChannelParams& params);
ordered_json to_json(const RadialPmf& pmf);
ordered_json to_json(const BdDistribution& dist);
ordered_json to_json(const BoundarySolution& sol, const ChannelParams& params);

ChannelParams channel_params_from_json(const ordered_json& j);
RadialPmf radial_pmf_from_json(const ordered_json& j);
BdDistribution bd_distribution_from_json(const ordered_json& j);
BoundarySolution boundary_solution_from_json(const ordered_json& j, ChannelParams* params_out = nullptr);

// All floating-point output is rounded to 10 significant digits before
// emission so reruns diff cleanly.
double round_10sig(double v);
std::string format_10sig(double v);

}  // namespace ammac

#endif
