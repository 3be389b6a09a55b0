#include "checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "error.hpp"

namespace ftsqa {

using nlohmann::json;

static const char kMagic[6] = {'F', 'T', 'S', 'B', '1', '\n'};

static void put_u64(std::string& out, std::uint64_t x) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((x >> (8 * i)) & 0xff));
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  if (ckpt.dtype != "f32" && ckpt.dtype != "f64") {
    fail(ErrorKind::invalid_argument, "checkpoint dtype must be f32 or f64");
  }
  const std::size_t unit = ckpt.dtype == "f32" ? 4 : 8;

  json dir = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    json entry;
    entry["name"] = name;
    entry["dims"] = t.matrix ? json::array({t.rows, t.cols}) : json::array({t.rows});
    entry["offset"] = offset;
    dir.push_back(std::move(entry));
    offset += t.size() * unit;
  }

  json header;
  header["version"] = ckpt.version;
  header["dtype"] = ckpt.dtype;
  header["config"] = ckpt.config;
  header["vocab"] = {
      {"tokens", ckpt.vocab.id_to_token},
      {"unk_id", ckpt.vocab.unk_id},
      {"pad_id", ckpt.vocab.pad_id},
      {"unk_policy", ckpt.vocab.unk_policy == UnkPolicy::zero ? "zero" : "trainable"},
  };
  json answers = json::array();
  for (const Answer& a : ckpt.answers.answers) {
    answers.push_back({{"id", a.id}, {"phrase", a.phrase}, {"tokens", a.tokens}});
  }
  header["answers"] = std::move(answers);
  header["tensors"] = std::move(dir);
  header["best"] = {{"epoch", ckpt.best.epoch}, {"val_acc", ckpt.best.val_acc}};

  const std::string header_text = header.dump();
  std::string blob;
  blob.append(kMagic, sizeof kMagic);
  put_u64(blob, header_text.size());
  blob += header_text;
  for (const auto& [name, t] : ckpt.tensors) {
    for (double x : t.v) {
      if (unit == 4) {
        const float f = static_cast<float>(x);
        char buf[4];
        std::memcpy(buf, &f, 4);
        blob.append(buf, 4);
      } else {
        char buf[8];
        std::memcpy(buf, &x, 8);
        blob.append(buf, 8);
      }
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorKind::io, "cannot write checkpoint: " + tmp);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) fail(ErrorKind::io, "checkpoint write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::io, "cannot rename " + tmp + " to " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open checkpoint: " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < sizeof kMagic + 8 || std::memcmp(blob.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::parse, "bad magic in checkpoint " + path);
  }
  std::uint64_t header_len = 0;
  for (int i = 7; i >= 0; --i) {
    header_len = (header_len << 8) | static_cast<unsigned char>(blob[sizeof kMagic + i]);
  }
  const std::size_t header_start = sizeof kMagic + 8;
  if (header_start + header_len > blob.size()) {
    fail(ErrorKind::parse, "truncated checkpoint header in " + path);
  }

  json header;
  try {
    header = json::parse(blob.substr(header_start, header_len));
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, "unreadable checkpoint header in " + path + ": " + e.what());
  }

  Checkpoint ckpt;
  ckpt.version = header.value("version", -1);
  if (ckpt.version != 1) {
    fail(ErrorKind::parse, "unsupported checkpoint version " +
                               std::to_string(ckpt.version) + " in " + path);
  }
  ckpt.dtype = header.value("dtype", "f32");
  if (ckpt.dtype != "f32" && ckpt.dtype != "f64") {
    fail(ErrorKind::parse, "unknown checkpoint dtype '" + ckpt.dtype + "' in " + path);
  }
  ckpt.config = header.value("config", std::map<std::string, std::string>{});

  const json& v = header.at("vocab");
  ckpt.vocab.id_to_token = v.at("tokens").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < ckpt.vocab.id_to_token.size(); ++i) {
    ckpt.vocab.token_to_id.emplace(ckpt.vocab.id_to_token[i], static_cast<int>(i));
  }
  ckpt.vocab.unk_id = v.at("unk_id").get<int>();
  ckpt.vocab.pad_id = v.at("pad_id").get<int>();
  ckpt.vocab.unk_policy =
      v.value("unk_policy", "trainable") == std::string("zero") ? UnkPolicy::zero
                                                                : UnkPolicy::trainable;

  for (const json& a : header.at("answers")) {
    Answer ans;
    ans.id = a.at("id").get<int>();
    ans.phrase = a.at("phrase").get<std::string>();
    ans.tokens = a.at("tokens").get<std::vector<std::string>>();
    ckpt.answers.answers.push_back(std::move(ans));
  }

  ckpt.best.epoch = header.at("best").at("epoch").get<int>();
  ckpt.best.val_acc = header.at("best").at("val_acc").get<double>();

  const std::size_t unit = ckpt.dtype == "f32" ? 4 : 8;
  const std::size_t payload_start = header_start + header_len;
  for (const json& entry : header.at("tensors")) {
    const std::string name = entry.at("name").get<std::string>();
    const auto dims = entry.at("dims").get<std::vector<std::size_t>>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    Tensor t;
    if (dims.size() == 1) {
      t = Tensor::vec(dims[0]);
    } else if (dims.size() == 2) {
      t = Tensor::mat(dims[0], dims[1]);
    } else {
      fail(ErrorKind::parse, "tensor '" + name + "' has rank " + std::to_string(dims.size()));
    }
    const std::size_t begin = payload_start + offset;
    if (begin + t.size() * unit > blob.size()) {
      fail(ErrorKind::parse, "truncated payload for tensor '" + name + "' in " + path);
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (unit == 4) {
        float f;
        std::memcpy(&f, blob.data() + begin + i * 4, 4);
        t.v[i] = static_cast<double>(f);
      } else {
        std::memcpy(&t.v[i], blob.data() + begin + i * 8, 8);
      }
    }
    ckpt.tensors.emplace_back(name, std::move(t));
  }
  return ckpt;
}

} // namespace ftsqa
