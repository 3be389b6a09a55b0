#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tensor.hpp"

namespace ftsqa {

// lowercase, split on whitespace, strip leading/trailing non-alphanumeric
// bytes (ASCII only; UTF-8 continuation bytes pass through), drop empties
std::vector<std::string> tokenize(const std::string& text);

struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, Tensor> entries;
  std::size_t skipped_lines = 0;

  const Tensor* find(const std::string& token) const {
    auto it = entries.find(token);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// text format: one entry per line, `token v1 v2 ... v_dim`
EmbeddingTable load_embeddings(const std::string& path, std::size_t dim);

enum class UnkPolicy { trainable, zero };

struct Vocabulary {
  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;
  int unk_id = -1;
  int pad_id = -1;
  UnkPolicy unk_policy = UnkPolicy::trainable;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int lookup(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
  }
  int add(const std::string& token);
};

struct Question {
  std::vector<std::string> sentences;
  std::vector<std::string> tokens; // concatenated sentences, tokenized
  std::vector<int> token_ids;     // filled by encode()
  int answer_id = -1;
};

struct Answer {
  int id = -1;
  std::string phrase;
  std::vector<std::string> tokens;
  std::vector<int> token_ids; // filled by encode()
};

struct AnswerSet {
  std::vector<Answer> answers; // index == id

  int find_phrase(const std::string& phrase) const {
    for (const Answer& a : answers) {
      if (a.phrase == phrase) return a.id;
    }
    return -1;
  }
};

enum class SplitTag { unsplit, train, validation, test };

struct Dataset {
  std::vector<Question> questions;
  AnswerSet answer_set;
  SplitTag split_tag = SplitTag::unsplit;
};

// JSON Lines, record schema {"question": [sentences], "answer": "phrase"};
// unknown keys ignored, zero-token questions rejected with a warning
Dataset load_dataset(const std::string& path);
void save_dataset(const Dataset& d, const std::string& path);

// keeps questions whose answer class has >= min_count questions; answer
// ids re-densified
Dataset filter_min_answer_count(const Dataset& d, int min_count);

struct SplitResult {
  Dataset train, validation, test;
};

// per answer class: shuffle, floor(0.2n) to test, floor(0.2n) to
// validation, rest to train
SplitResult split_dataset(const Dataset& d, std::uint64_t seed);

// builds ids from the dataset's questions then answers, first-seen order;
// <unk> and <pad> are reserved at ids 0 and 1
Vocabulary build_vocabulary(const Dataset& d, UnkPolicy policy);

// maps every token to its vocabulary id (unk for out-of-vocabulary)
void encode(Dataset& d, const Vocabulary& vocab);
void encode_answers(AnswerSet& answers, const Vocabulary& vocab);

// Desk-scale benchmark generator: each answer class gets signature_len
// unique tokens; every question interleaves its class signature with
// noise_len draws from a shared pool. Answer phrase is the token ans_<k>.
Dataset generate_synthetic(int n_answers, int q_per_answer, int signature_len,
                           int noise_len, std::uint64_t seed);

} // namespace ftsqa
