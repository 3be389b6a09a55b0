#include "data.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "error.hpp"
#include "rng.hpp"

namespace ftsqa {

using nlohmann::json;

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](unsigned char c) { return c < 0x80 && std::isspace(c); };
  auto is_word = [](unsigned char c) { return c >= 0x80 || std::isalnum(c); };
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      std::size_t b = i, e = j;
      while (b < e && !is_word(static_cast<unsigned char>(text[b]))) ++b;
      while (e > b && !is_word(static_cast<unsigned char>(text[e - 1]))) --e;
      if (e > b) {
        std::string tok = text.substr(b, e - b);
        for (char& c : tok) {
          if (static_cast<unsigned char>(c) < 0x80) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        out.push_back(std::move(tok));
      }
    }
    i = j;
  }
  return out;
}

EmbeddingTable load_embeddings(const std::string& path, std::size_t dim) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open embedding file: " + path);
  EmbeddingTable table;
  table.dim = dim;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    Tensor vec = Tensor::vec(dim);
    bool ok = !token.empty();
    for (std::size_t k = 0; ok && k < dim; ++k) {
      if (!(ss >> vec.v[k])) ok = false;
    }
    double extra;
    if (ok && (ss >> extra)) ok = false; // wrong arity
    if (!ok) {
      ++table.skipped_lines;
      std::cerr << "warning: skipping malformed embedding line " << lineno << "\n";
      continue;
    }
    table.entries[token] = std::move(vec);
  }
  if (table.entries.empty()) {
    fail(ErrorKind::parse, "no usable embedding lines in " + path);
  }
  return table;
}

int Vocabulary::add(const std::string& token) {
  auto it = token_to_id.find(token);
  if (it != token_to_id.end()) return it->second;
  const int id = size();
  token_to_id.emplace(token, id);
  id_to_token.push_back(token);
  return id;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open dataset file: " + path);
  Dataset d;
  std::map<std::string, int> phrase_to_id;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!rec.is_object() || !rec.contains("question") || !rec.contains("answer") ||
        !rec["question"].is_array() || !rec["answer"].is_string()) {
      fail(ErrorKind::parse, path + ":" + std::to_string(lineno) +
                                 ": record must be {\"question\": [...], \"answer\": \"...\"}");
    }
    Question q;
    for (const auto& s : rec["question"]) {
      if (!s.is_string()) {
        fail(ErrorKind::parse, path + ":" + std::to_string(lineno) + ": question sentences must be strings");
      }
      q.sentences.push_back(s.get<std::string>());
      auto toks = tokenize(q.sentences.back());
      q.tokens.insert(q.tokens.end(), toks.begin(), toks.end());
    }
    if (q.tokens.empty()) {
      std::cerr << "warning: " << path << ":" << lineno << ": question has no tokens, record dropped\n";
      continue;
    }
    const std::string phrase = rec["answer"].get<std::string>();
    auto it = phrase_to_id.find(phrase);
    if (it == phrase_to_id.end()) {
      Answer a;
      a.id = static_cast<int>(d.answer_set.answers.size());
      a.phrase = phrase;
      a.tokens = tokenize(phrase);
      if (a.tokens.empty()) {
        std::cerr << "warning: " << path << ":" << lineno << ": answer has no tokens, record dropped\n";
        continue;
      }
      it = phrase_to_id.emplace(phrase, a.id).first;
      d.answer_set.answers.push_back(std::move(a));
    }
    q.answer_id = it->second;
    d.questions.push_back(std::move(q));
  }
  return d;
}

void save_dataset(const Dataset& d, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) fail(ErrorKind::io, "cannot write dataset file: " + tmp);
    for (const Question& q : d.questions) {
      json rec;
      if (!q.sentences.empty()) {
        rec["question"] = q.sentences;
      } else {
        std::string joined;
        for (std::size_t i = 0; i < q.tokens.size(); ++i) {
          if (i) joined += ' ';
          joined += q.tokens[i];
        }
        rec["question"] = json::array({joined});
      }
      rec["answer"] = d.answer_set.answers.at(q.answer_id).phrase;
      out << rec.dump() << "\n";
    }
    if (!out) fail(ErrorKind::io, "write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    fail(ErrorKind::io, "cannot rename " + tmp + " to " + path);
  }
}

Dataset filter_min_answer_count(const Dataset& d, int min_count) {
  if (min_count < 1) fail(ErrorKind::invalid_argument, "filter_min_answer_count: min_count must be >= 1");
  std::vector<int> counts(d.answer_set.answers.size(), 0);
  for (const Question& q : d.questions) counts[q.answer_id]++;

  std::vector<int> remap(d.answer_set.answers.size(), -1);
  Dataset out;
  for (const Answer& a : d.answer_set.answers) {
    if (counts[a.id] >= min_count) {
      Answer kept = a;
      kept.id = static_cast<int>(out.answer_set.answers.size());
      remap[a.id] = kept.id;
      out.answer_set.answers.push_back(std::move(kept));
    }
  }
  for (const Question& q : d.questions) {
    if (remap[q.answer_id] >= 0) {
      Question kept = q;
      kept.answer_id = remap[q.answer_id];
      out.questions.push_back(std::move(kept));
    }
  }
  if (out.questions.empty()) {
    fail(ErrorKind::state, "filter_min_answer_count: no questions left at min_count=" +
                               std::to_string(min_count));
  }
  out.split_tag = d.split_tag;
  return out;
}

SplitResult split_dataset(const Dataset& d, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> per_class(d.answer_set.answers.size());
  for (std::size_t i = 0; i < d.questions.size(); ++i) {
    per_class[d.questions[i].answer_id].push_back(i);
  }
  // 0=train 1=validation 2=test
  std::vector<int> dest(d.questions.size(), 0);
  Rng rng(seed);
  for (auto& members : per_class) {
    rng.shuffle(members);
    const std::size_t n = members.size();
    const std::size_t n_test = n / 5;
    const std::size_t n_valid = n / 5;
    for (std::size_t k = 0; k < n_test; ++k) dest[members[k]] = 2;
    for (std::size_t k = n_test; k < n_test + n_valid; ++k) dest[members[k]] = 1;
  }
  SplitResult out;
  out.train.answer_set = d.answer_set;
  out.validation.answer_set = d.answer_set;
  out.test.answer_set = d.answer_set;
  out.train.split_tag = SplitTag::train;
  out.validation.split_tag = SplitTag::validation;
  out.test.split_tag = SplitTag::test;
  for (std::size_t i = 0; i < d.questions.size(); ++i) {
    Dataset& target = dest[i] == 0 ? out.train : dest[i] == 1 ? out.validation : out.test;
    target.questions.push_back(d.questions[i]);
  }
  return out;
}

Vocabulary build_vocabulary(const Dataset& d, UnkPolicy policy) {
  Vocabulary v;
  v.unk_policy = policy;
  v.unk_id = v.add("<unk>");
  v.pad_id = v.add("<pad>");
  for (const Question& q : d.questions) {
    for (const std::string& t : q.tokens) v.add(t);
  }
  for (const Answer& a : d.answer_set.answers) {
    for (const std::string& t : a.tokens) v.add(t);
  }
  return v;
}

void encode_answers(AnswerSet& answers, const Vocabulary& vocab) {
  for (Answer& a : answers.answers) {
    a.token_ids.clear();
    a.token_ids.reserve(a.tokens.size());
    for (const std::string& t : a.tokens) a.token_ids.push_back(vocab.lookup(t));
  }
}

void encode(Dataset& d, const Vocabulary& vocab) {
  for (Question& q : d.questions) {
    q.token_ids.clear();
    q.token_ids.reserve(q.tokens.size());
    for (const std::string& t : q.tokens) q.token_ids.push_back(vocab.lookup(t));
  }
  encode_answers(d.answer_set, vocab);
}

Dataset generate_synthetic(int n_answers, int q_per_answer, int signature_len,
                           int noise_len, std::uint64_t seed) {
  if (n_answers < 1 || q_per_answer < 1 || signature_len < 1 || noise_len < 0) {
    fail(ErrorKind::invalid_argument, "generate_synthetic: all sizes must be >= 1 (noise may be 0)");
  }
  Rng rng(seed);
  const int pool = std::max(10, 2 * noise_len);
  auto noise_tok = [](int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "noise_%03d", i);
    return std::string(buf);
  };
  Dataset d;
  for (int k = 0; k < n_answers; ++k) {
    Answer a;
    a.id = k;
    a.phrase = "ans_" + std::to_string(k);
    a.tokens = {a.phrase};
    d.answer_set.answers.push_back(std::move(a));
  }
  for (int k = 0; k < n_answers; ++k) {
    std::vector<std::string> sig;
    for (int s = 0; s < signature_len; ++s) {
      sig.push_back("sig_" + std::to_string(k) + "_" + std::to_string(s));
    }
    for (int q = 0; q < q_per_answer; ++q) {
      std::vector<std::string> toks = sig;
      for (int s = 0; s < noise_len; ++s) {
        toks.push_back(noise_tok(static_cast<int>(rng.below(pool))));
      }
      rng.shuffle(toks);
      Question question;
      question.tokens = toks;
      std::string joined;
      for (std::size_t i = 0; i < toks.size(); ++i) {
        if (i) joined += ' ';
        joined += toks[i];
      }
      question.sentences = {joined};
      question.answer_id = k;
      d.questions.push_back(std::move(question));
    }
  }
  return d;
}

} // namespace ftsqa
