#ifndef AMMAC_MC_HPP
#define AMMAC_MC_HPP

#include <cstdint>

#include "ammac/types.hpp"

namespace ammac::mc {

// Counter-based generator: sample i of a stream is a pure function of
// (seed, stream, i), so parallel partitions reproduce bit-identically no
// matter how the work is scheduled.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream);

  std::uint64_t raw(std::uint64_t counter) const;
  double uniform(std::uint64_t counter) const;  // in (0, 1]

 private:
  std::uint64_t key_;
};

struct McEstimate {
  double mean = 0.0;       // nats
  double std_error = 0.0;  // sample std / sqrt(n)
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
};

// Unbiased estimators: the sampled output density is evaluated through the
// exact finite-mixture expressions, so E[-ln f(Y)] equals the entropy.
McEstimate mc_h_Y(const RadialPmf& f_r, const BdDistribution& f_x2, const ChannelParams& params,
                  const QuadConfig& cfg);

McEstimate mc_h_Y_given_X1(const RadialPmf& f_r, const BdDistribution& f_x2,
                           const ChannelParams& params, const QuadConfig& cfg);

struct McMutualInfos {
  McEstimate I_x1_y;
  McEstimate I_x2_y_given_x1;
  McEstimate I_joint;
  McEstimate I_x1_y_given_x2;
};

McMutualInfos mc_mutual_infos(const RadialPmf& f_r, const BdDistribution& f_x2,
                              const ChannelParams& params, const QuadConfig& cfg);

}  // namespace ammac::mc

#endif
