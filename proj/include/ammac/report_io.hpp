#ifndef AMMAC_REPORT_IO_HPP
#define AMMAC_REPORT_IO_HPP

#include <ostream>
#include <string>
#include <vector>

#include "ammac/optimizer.hpp"
#include "ammac/types.hpp"

namespace ammac::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidInput = 2;
inline constexpr int kExitNumericalFailure = 3;

struct RunConfig {
  ChannelParams params;
  QuadConfig quad;
  OptimConfig optim;
  std::string out_dir;        // empty -> stdout only
  std::string solution_file;  // kkt input
  int boundary_weights = 21;
  std::vector<double> snr_grid_db = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
};

// Each command returns a process exit code (0 ok, 2 invalid input,
// 3 numerical failure) and writes human-facing output to `out`. Files are
// only written once the computation has fully completed.
int cmd_corners(const RunConfig& rc, std::ostream& out);
int cmd_boundary(const RunConfig& rc, std::ostream& out);
int cmd_baseline(const RunConfig& rc, std::ostream& out);
int cmd_bdmax(const RunConfig& rc, std::ostream& out);
int cmd_kkt(const RunConfig& rc, std::ostream& out);
int cmd_mc_check(const RunConfig& rc, std::ostream& out);

// Deterministic model used by `mc-check`: 3 amplitude points and 3 BD
// points drawn from the seed, power-feasible by construction.
void randomized_model(const ChannelParams& params, std::uint64_t seed, RadialPmf* f_r,
                      BdDistribution* f_x2);

}  // namespace ammac::cli

#endif
