#pragma once

#include <map>
#include <string>
#include <vector>

#include "data.hpp"
#include "tensor.hpp"

namespace ftsqa {

struct BestMeta {
  int epoch = -1;
  double val_acc = 0.0;
};

// On-disk layout: magic "FTSB1\n", little-endian u64 header length, JSON
// header (config snapshot, vocabulary, answer set, tensor directory with
// payload offsets), then raw little-endian float payloads in directory
// order. dtype "f32" (default) or "f64".
struct Checkpoint {
  int version = 1;
  std::string dtype = "f32";
  std::map<std::string, std::string> config;
  Vocabulary vocab;
  AnswerSet answers;
  std::vector<std::pair<std::string, Tensor>> tensors;
  BestMeta best;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

} // namespace ftsqa
