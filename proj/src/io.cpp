#include "ncdl/io.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace ncdl::io {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void schema_error(const std::string& path, std::size_t line,
                               const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = {}) {
  std::ofstream out(path, mode);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode = {}) {
  std::ifstream in(path, mode);
  if (!in) throw std::runtime_error("cannot read " + path);
  return in;
}

// Applies fn to each parsed JSONL record, reporting file+line on failure.
template <typename Fn>
void for_each_line(const std::string& path, Fn fn) {
  std::ifstream in = open_in(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const std::exception& e) {
      schema_error(path, lineno, std::string("invalid JSON: ") + e.what());
    }
    try {
      fn(rec);
    } catch (const std::exception& e) {
      schema_error(path, lineno, e.what());
    }
  }
}

Rect rect_from(const json& rec) {
  Rect r{rec.at("x1").get<double>(), rec.at("y1").get<double>(),
         rec.at("x2").get<double>(), rec.at("y2").get<double>()};
  if (!r.valid()) throw std::runtime_error("invalid rect");
  return r;
}

std::string source_name(BoxSource s) {
  switch (s) {
    case BoxSource::ClassAware: return "aware";
    case BoxSource::ClassAgnostic: return "agnostic";
    case BoxSource::Fused: return "fused";
  }
  return "aware";
}

BoxSource source_from(const std::string& s) {
  if (s == "aware") return BoxSource::ClassAware;
  if (s == "agnostic") return BoxSource::ClassAgnostic;
  if (s == "fused") return BoxSource::Fused;
  throw std::runtime_error("unknown source tag: " + s);
}

}  // namespace

void write_gt(const std::string& path, const GroundTruth& gt) {
  std::ofstream out = open_out(path);
  for (const auto& [image_id, boxes] : gt.images) {
    for (const GtBox& g : boxes) {
      json rec;
      rec["image_id"] = image_id;
      rec["x1"] = g.rect.x1;
      rec["y1"] = g.rect.y1;
      rec["x2"] = g.rect.x2;
      rec["y2"] = g.rect.y2;
      rec["class_id"] = g.class_id;
      rec["known"] = g.known;
      out << rec.dump() << "\n";
    }
  }
}

GroundTruth read_gt(const std::string& path) {
  GroundTruth gt;
  for_each_line(path, [&](const json& rec) {
    GtBox g;
    g.rect = rect_from(rec);
    g.class_id = rec.at("class_id").get<int>();
    g.known = rec.at("known").get<bool>();
    gt.images[rec.at("image_id").get<std::int64_t>()].push_back(g);
  });
  return gt;
}

void write_proposals(const std::string& path, const std::vector<DetBox>& boxes) {
  std::ofstream out = open_out(path);
  for (const DetBox& b : boxes) {
    json rec;
    rec["image_id"] = b.image_id;
    rec["x1"] = b.rect.x1;
    rec["y1"] = b.rect.y1;
    rec["x2"] = b.rect.x2;
    rec["y2"] = b.rect.y2;
    rec["score"] = b.score;
    rec["source"] = source_name(b.source);
    out << rec.dump() << "\n";
  }
}

std::vector<DetBox> read_proposals(const std::string& path) {
  std::vector<DetBox> boxes;
  for_each_line(path, [&](const json& rec) {
    DetBox b;
    b.image_id = rec.at("image_id").get<std::int64_t>();
    b.rect = rect_from(rec);
    b.score = rec.at("score").get<double>();
    if (!(b.score >= 0.0 && b.score <= 1.0)) {
      throw std::runtime_error("score out of [0,1]");
    }
    b.source = source_from(rec.at("source").get<std::string>());
    boxes.push_back(b);
  });
  return boxes;
}

namespace {
constexpr char kDescriptorMagic[8] = {'N', 'C', 'D', 'L', 'D', 'S', 'C', '1'};
constexpr char kEmbedderMagic[8] = {'N', 'C', 'D', 'L', 'E', 'M', 'B', '1'};
}  // namespace

void write_descriptors(const std::string& path, const Eigen::MatrixXd& rows) {
  std::ofstream out = open_out(path, std::ios::binary);
  const std::uint32_t n = static_cast<std::uint32_t>(rows.rows());
  const std::uint32_t d = static_cast<std::uint32_t>(rows.cols());
  out.write(kDescriptorMagic, 8);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&d), 4);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      const float v = static_cast<float>(rows(i, j));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  }
}

Eigen::MatrixXd read_descriptors(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[8];
  std::uint32_t n = 0;
  std::uint32_t d = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&d), 4);
  if (!in || std::memcmp(magic, kDescriptorMagic, 8) != 0) {
    throw std::runtime_error(path + ": not a descriptor file");
  }
  Eigen::MatrixXd rows(n, d);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < d; ++j) {
      float v = 0.0f;
      in.read(reinterpret_cast<char*>(&v), 4);
      rows(i, j) = static_cast<double>(v);
    }
  }
  if (!in) throw std::runtime_error(path + ": truncated descriptor file");
  return rows;
}

void write_instance_index(const std::string& path,
                          const std::vector<InstanceRecord>& records) {
  std::ofstream out = open_out(path);
  for (const InstanceRecord& r : records) {
    json rec;
    rec["instance_id"] = r.instance_id;
    rec["image_id"] = r.image_id;
    rec["x1"] = r.rect.x1;
    rec["y1"] = r.rect.y1;
    rec["x2"] = r.rect.x2;
    rec["y2"] = r.rect.y2;
    rec["class_id"] = r.class_id;
    rec["known"] = r.known;
    out << rec.dump() << "\n";
  }
}

std::vector<InstanceRecord> read_instance_index(const std::string& path) {
  std::vector<InstanceRecord> records;
  for_each_line(path, [&](const json& rec) {
    InstanceRecord r;
    r.instance_id = rec.at("instance_id").get<std::int64_t>();
    r.image_id = rec.at("image_id").get<std::int64_t>();
    r.rect = rect_from(rec);
    r.class_id = rec.at("class_id").get<int>();
    r.known = rec.at("known").get<bool>();
    records.push_back(r);
  });
  return records;
}

void write_embedder(const std::string& path, const Embedder& model,
                    std::uint64_t seed) {
  std::ofstream out = open_out(path, std::ios::binary);
  const std::uint32_t d_in = static_cast<std::uint32_t>(model.w1.cols());
  const std::uint32_t d_hidden = static_cast<std::uint32_t>(model.w1.rows());
  const std::uint32_t d_out = static_cast<std::uint32_t>(model.w2.rows());
  out.write(kEmbedderMagic, 8);
  out.write(reinterpret_cast<const char*>(&d_in), 4);
  out.write(reinterpret_cast<const char*>(&d_hidden), 4);
  out.write(reinterpret_cast<const char*>(&d_out), 4);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  auto dump_matrix = [&out](const Eigen::MatrixXd& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double v = m(r, c);
        out.write(reinterpret_cast<const char*>(&v), 8);
      }
    }
  };
  dump_matrix(model.w1);
  dump_matrix(model.b1);
  dump_matrix(model.w2);
  dump_matrix(model.b2);
}

Embedder read_embedder(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::binary);
  char magic[8];
  std::uint32_t d_in = 0;
  std::uint32_t d_hidden = 0;
  std::uint32_t d_out = 0;
  std::uint64_t seed = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&d_in), 4);
  in.read(reinterpret_cast<char*>(&d_hidden), 4);
  in.read(reinterpret_cast<char*>(&d_out), 4);
  in.read(reinterpret_cast<char*>(&seed), 8);
  if (!in || std::memcmp(magic, kEmbedderMagic, 8) != 0) {
    throw std::runtime_error(path + ": not an embedder file");
  }
  Embedder model;
  model.w1.resize(d_hidden, d_in);
  model.b1.resize(d_hidden);
  model.w2.resize(d_out, d_hidden);
  model.b2.resize(d_out);
  auto load_matrix = [&in](Eigen::Ref<Eigen::MatrixXd> m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        double v = 0.0;
        in.read(reinterpret_cast<char*>(&v), 8);
        m(r, c) = v;
      }
    }
  };
  load_matrix(model.w1);
  load_matrix(model.b1);
  load_matrix(model.w2);
  load_matrix(model.b2);
  if (!in) throw std::runtime_error(path + ": truncated embedder file");
  return model;
}

void write_assignments(const std::string& path,
                       const std::vector<int>& assignments) {
  std::ofstream out = open_out(path);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    json rec;
    rec["instance_id"] = i;
    rec["cluster"] = assignments[i];
    out << rec.dump() << "\n";
  }
}

std::vector<int> read_assignments(const std::string& path) {
  std::vector<int> assignments;
  for_each_line(path, [&](const nlohmann::ordered_json& rec) {
    const std::int64_t id = rec.at("instance_id").get<std::int64_t>();
    if (id != static_cast<std::int64_t>(assignments.size())) {
      throw std::runtime_error("instance_id out of order");
    }
    assignments.push_back(rec.at("cluster").get<int>());
  });
  return assignments;
}

}  // namespace ncdl::io
