#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ncdl/drm.hpp"
#include "ncdl/embed.hpp"
#include "ncdl/metrics.hpp"
#include "ncdl/synth.hpp"

namespace ncdl::io {

// Ground truth as JSON lines:
//   {"image_id":0,"x1":..,"y1":..,"x2":..,"y2":..,"class_id":5,"known":true}
void write_gt(const std::string& path, const GroundTruth& gt);
GroundTruth read_gt(const std::string& path);

// Proposals as JSON lines:
//   {"image_id":0,"x1":..,"y1":..,"x2":..,"y2":..,"score":0.8,"source":"aware"}
void write_proposals(const std::string& path, const std::vector<DetBox>& boxes);
std::vector<DetBox> read_proposals(const std::string& path);

// Descriptor matrix: 16-byte header (8-byte magic, uint32 rows, uint32 dim)
// followed by row-major little-endian float32 values.
void write_descriptors(const std::string& path, const Eigen::MatrixXd& rows);
Eigen::MatrixXd read_descriptors(const std::string& path);

// Companion instance index, one line per descriptor row:
//   {"instance_id":0,"image_id":3,"x1":..,"y1":..,"x2":..,"y2":..,
//    "class_id":5,"known":true}
// class_id is -1 for background/unlabeled instances.
struct InstanceRecord {
  std::int64_t instance_id = 0;
  std::int64_t image_id = 0;
  Rect rect;
  int class_id = -1;
  bool known = false;
};
void write_instance_index(const std::string& path,
                          const std::vector<InstanceRecord>& records);
std::vector<InstanceRecord> read_instance_index(const std::string& path);

// Embedder parameters: header (magic, d_in, d_hidden, d_out, seed) followed
// by a flat double array (w1 row-major, b1, w2 row-major, b2).
void write_embedder(const std::string& path, const Embedder& model,
                    std::uint64_t seed);
Embedder read_embedder(const std::string& path);

// Cluster assignments, one line per instance: {"instance_id":0,"cluster":12}
void write_assignments(const std::string& path,
                       const std::vector<int>& assignments);
std::vector<int> read_assignments(const std::string& path);

}  // namespace ncdl::io
