#pragma once

#include <Eigen/Dense>

#include <vector>

namespace gemkit {

/// Per-vertex demand (open orders) and supply (idle drivers) at one minute.
struct Snapshot {
  long timestamp = 0;
  Eigen::VectorXd demand;
  Eigen::VectorXd supply;
};

using SnapshotSeries = std::vector<Snapshot>;

}  // namespace gemkit
