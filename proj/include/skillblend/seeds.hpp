#pragma once

// TF-IDF retrieval over skill-context documents and construction of seed
// episodes: a two-turn utterance pair, one SkillContextSet per side and the
// initial active skill.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "skillblend/core.hpp"
#include "skillblend/text.hpp"

namespace skillblend {

enum class SideRole { primary_role, counterpart_role };

inline const char* to_string(SideRole role) {
  return role == SideRole::primary_role ? "primary" : "counterpart";
}

inline std::optional<SideRole> parse_side_role(std::string_view s) {
  if (s == "primary") return SideRole::primary_role;
  if (s == "counterpart") return SideRole::counterpart_role;
  return std::nullopt;
}

struct ContextDoc {
  int doc_id = 0;
  SkillId skill;
  SideRole role = SideRole::primary_role;
  std::string text;  // lines joined by a single space
  std::vector<std::string> lines;

  static ContextDoc make(int doc_id, SkillId skill, SideRole role, std::vector<std::string> lines) {
    ContextDoc d{doc_id, std::move(skill), role, {}, std::move(lines)};
    d.text = join(d.lines, " ");
    return d;
  }
};

struct SparseEntry {
  std::uint32_t term = 0;
  double weight = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

struct IndexedDoc {
  int doc_id = 0;
  std::string skill;
  SideRole role = SideRole::primary_role;

  friend bool operator==(const IndexedDoc&, const IndexedDoc&) = default;
};

struct QueryHit {
  int doc_id = 0;
  double cosine = 0.0;

  friend bool operator==(const QueryHit&, const QueryHit&) = default;
};

// Unigram tf-idf with idf = ln(N / (1 + df)) + 1 (clamped at 0) and
// L2-normalized document vectors. Immutable once built.
class TfIdfIndex {
 public:
  static constexpr int kFormatVersion = 1;

  TfIdfIndex() = default;
  TfIdfIndex(std::vector<std::string> terms, std::vector<double> idf, std::vector<IndexedDoc> docs,
             std::vector<std::vector<SparseEntry>> doc_vectors)
      : terms_(std::move(terms)), idf_(std::move(idf)), docs_(std::move(docs)), doc_vectors_(std::move(doc_vectors)) {
    if (terms_.size() != idf_.size() || docs_.size() != doc_vectors_.size()) {
      throw Error(ErrorCode::invalid_input, "tf-idf index: inconsistent sizes");
    }
    for (std::uint32_t t = 0; t < terms_.size(); ++t) vocabulary_.emplace(terms_[t], t);
    postings_.assign(terms_.size(), {});
    for (std::size_t d = 0; d < doc_vectors_.size(); ++d) {
      for (const auto& e : doc_vectors_[d]) {
        if (e.term >= terms_.size()) throw Error(ErrorCode::invalid_input, "tf-idf index: term id out of range");
        postings_[e.term].push_back({static_cast<std::uint32_t>(d), e.weight});
      }
    }
  }

  std::size_t doc_count() const { return docs_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }
  const std::vector<IndexedDoc>& docs() const { return docs_; }
  const std::vector<std::vector<SparseEntry>>& doc_vectors() const { return doc_vectors_; }

  std::optional<std::uint32_t> term_id(const std::string& term) const {
    auto it = vocabulary_.find(term);
    if (it == vocabulary_.end()) return std::nullopt;
    return it->second;
  }

  // L2-normalized tf-idf vector of `text`; out-of-vocabulary terms are dropped.
  std::vector<SparseEntry> vectorize(std::string_view text) const {
    std::map<std::uint32_t, double> tf;
    for (const auto& tok : tokenize(text)) {
      if (auto id = term_id(tok)) tf[*id] += 1.0;
    }
    std::vector<SparseEntry> v;
    double norm2 = 0.0;
    for (const auto& [id, count] : tf) {
      double w = count * idf_[id];
      if (w == 0.0) continue;
      v.push_back({id, w});
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double norm = std::sqrt(norm2);
      for (auto& e : v) e.weight /= norm;
    }
    return v;
  }

  std::vector<QueryHit> query(std::string_view text, std::size_t k, const std::optional<std::string>& filter_skill = {},
                              std::optional<SideRole> filter_role = {}) const {
    if (k == 0) throw Error(ErrorCode::invalid_input, "query: k must be >= 1");
    const auto q = vectorize(text);
    std::vector<double> acc(docs_.size(), 0.0);
    for (const auto& qe : q) {
      for (const auto& [doc, w] : postings_[qe.term]) acc[doc] += qe.weight * w;
    }
    std::vector<QueryHit> hits;
    for (std::size_t d = 0; d < docs_.size(); ++d) {
      if (!(acc[d] > 0.0)) continue;
      if (filter_skill && docs_[d].skill != *filter_skill) continue;
      if (filter_role && docs_[d].role != *filter_role) continue;
      hits.push_back({docs_[d].doc_id, acc[d]});
    }
    std::sort(hits.begin(), hits.end(), [](const QueryHit& a, const QueryHit& b) {
      if (a.cosine != b.cosine) return a.cosine > b.cosine;
      return a.doc_id < b.doc_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
  }

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::vector<IndexedDoc> docs_;
  std::vector<std::vector<SparseEntry>> doc_vectors_;
  std::unordered_map<std::string, std::uint32_t> vocabulary_;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> postings_;
};

inline TfIdfIndex build_index(const std::vector<ContextDoc>& docs) {
  if (docs.empty()) throw Error(ErrorCode::invalid_input, "build_index: no documents");
  std::vector<std::map<std::string, double>> tfs;
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    std::map<std::string, double> tf;
    for (auto& tok : tokenize(d.text)) tf[std::move(tok)] += 1.0;
    for (const auto& [term, count] : tf) ++df[term];
    tfs.push_back(std::move(tf));
  }

  std::vector<std::string> terms;
  std::vector<double> idf;
  std::map<std::string, std::uint32_t> ids;
  const double n = static_cast<double>(docs.size());
  for (const auto& [term, count] : df) {
    ids.emplace(term, static_cast<std::uint32_t>(terms.size()));
    terms.push_back(term);
    idf.push_back(std::max(0.0, std::log(n / (1.0 + static_cast<double>(count))) + 1.0));
  }

  std::vector<IndexedDoc> meta;
  std::vector<std::vector<SparseEntry>> vectors;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    meta.push_back({docs[d].doc_id, docs[d].skill.id, docs[d].role});
    std::vector<SparseEntry> v;
    double norm2 = 0.0;
    for (const auto& [term, count] : tfs[d]) {  // map order == ascending term id
      const auto id = ids.at(term);
      const double w = count * idf[id];
      if (w == 0.0) continue;
      v.push_back({id, w});
      norm2 += w * w;
    }
    if (norm2 > 0.0) {
      const double norm = std::sqrt(norm2);
      for (auto& e : v) e.weight /= norm;
    }
    vectors.push_back(std::move(v));
  }
  return TfIdfIndex(std::move(terms), std::move(idf), std::move(meta), std::move(vectors));
}

inline std::vector<QueryHit> query(const TfIdfIndex& index, std::string_view text, std::size_t k,
                                   const std::optional<std::string>& filter_skill = {},
                                   std::optional<SideRole> filter_role = {}) {
  return index.query(text, k, filter_skill, filter_role);
}

// Text format:
//   skillblend-tfidf <version>
//   docs <N> terms <V>
//   term <text> <idf>                       (V lines, term id = line order)
//   doc <doc_id> <skill> <role> <nnz> <term>:<weight> ...   (N lines)
inline void save_index(const TfIdfIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write index file " + path);
  out << "skillblend-tfidf " << TfIdfIndex::kFormatVersion << '\n';
  out << "docs " << index.doc_count() << " terms " << index.terms().size() << '\n';
  for (std::size_t t = 0; t < index.terms().size(); ++t) {
    out << "term " << index.terms()[t] << ' ' << format_double(index.idf()[t]) << '\n';
  }
  for (std::size_t d = 0; d < index.doc_count(); ++d) {
    const auto& m = index.docs()[d];
    const auto& v = index.doc_vectors()[d];
    out << "doc " << m.doc_id << ' ' << m.skill << ' ' << to_string(m.role) << ' ' << v.size();
    for (const auto& e : v) out << ' ' << e.term << ':' << format_double(e.weight);
    out << '\n';
  }
  if (!out.flush()) throw Error(ErrorCode::io, "failed writing index file " + path);
}

inline TfIdfIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read index file " + path);
  auto fail = [&path](const std::string& what) -> void {
    throw Error(ErrorCode::parse, "index file " + path + ": " + what);
  };
  auto parse_double = [&fail](const std::string& s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  };

  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "skillblend-tfidf") fail("not an index file");
  if (version != TfIdfIndex::kFormatVersion) fail("unsupported version " + std::to_string(version));

  std::string kw1, kw2;
  std::size_t n_docs = 0, n_terms = 0;
  if (!(in >> kw1 >> n_docs >> kw2 >> n_terms) || kw1 != "docs" || kw2 != "terms") fail("bad header");

  std::vector<std::string> terms(n_terms);
  std::vector<double> idf(n_terms);
  for (std::size_t t = 0; t < n_terms; ++t) {
    std::string tag, value;
    if (!(in >> tag >> terms[t] >> value) || tag != "term") fail("bad term record " + std::to_string(t));
    idf[t] = parse_double(value);
  }

  std::vector<IndexedDoc> docs;
  std::vector<std::vector<SparseEntry>> vectors;
  std::string tag;
  while (in >> tag) {
    if (tag != "doc") fail("unexpected record '" + tag + "'");
    IndexedDoc m;
    std::string role;
    std::size_t nnz = 0;
    if (!(in >> m.doc_id >> m.skill >> role >> nnz)) fail("bad doc record");
    auto parsed = parse_side_role(role);
    if (!parsed) fail("bad role '" + role + "'");
    m.role = *parsed;
    std::vector<SparseEntry> v(nnz);
    for (auto& e : v) {
      std::string pair;
      in >> pair;
      auto colon = pair.find(':');
      if (colon == std::string::npos) fail("bad vector entry '" + pair + "'");
      e.term = static_cast<std::uint32_t>(parse_double(pair.substr(0, colon)));
      e.weight = parse_double(pair.substr(colon + 1));
    }
    docs.push_back(std::move(m));
    vectors.push_back(std::move(v));
  }
  if (docs.size() != n_docs) {
    fail("header declares " + std::to_string(n_docs) + " docs, found " + std::to_string(docs.size()));
  }
  return TfIdfIndex(std::move(terms), std::move(idf), std::move(docs), std::move(vectors));
}

// Empty when `index` was built from exactly `corpus` (same order, skills,
// roles and terms); otherwise names the first mismatching document.
inline std::string index_mismatch(const TfIdfIndex& index, const std::vector<ContextDoc>& corpus) {
  if (index.doc_count() != corpus.size()) {
    return "index has " + std::to_string(index.doc_count()) + " documents, corpus has " + std::to_string(corpus.size());
  }
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    const auto& meta = index.docs()[d];
    const auto& doc = corpus[d];
    const auto where = "document " + std::to_string(d);
    if (meta.doc_id != doc.doc_id || meta.skill != doc.skill.id || meta.role != doc.role) {
      return where + " differs in id, skill or role";
    }
    std::set<std::string> expected;
    for (const auto& t : tokenize(doc.text)) {
      auto id = index.term_id(t);
      if (id && index.idf()[*id] > 0.0) expected.insert(t);
    }
    std::set<std::string> stored;
    for (const auto& e : index.doc_vectors()[d]) stored.insert(index.terms()[e.term]);
    if (stored != expected) return where + " has different terms";
  }
  return {};
}

struct SeedEpisode {
  SkillId seed_dataset;
  std::array<Utterance, 2> pair;
  std::array<SkillContextSet, 2> contexts;
  SkillId initial_active;
  int variant_index = 0;
};

// Which document role each side draws for each skill (indexed by roster
// position). An empty slot gives the side no context for that skill.
struct RoleTemplate {
  std::array<std::vector<std::optional<SideRole>>, 2> sources;

  // Side 0 takes primary-role contexts, side 1 counterpart-role contexts.
  // Combined with datasets whose counterpart side has no context (the
  // empathy listener) this yields the usual asymmetric setup.
  static RoleTemplate standard(const SkillRoster& roster) {
    RoleTemplate t;
    t.sources[0].assign(roster.size(), SideRole::primary_role);
    t.sources[1].assign(roster.size(), SideRole::counterpart_role);
    return t;
  }
};

// For every skill and side, retrieves the top seeds_per_pair documents for
// the concatenated pair text; variant v takes the v-th hit of every bucket.
inline std::vector<SeedEpisode> build_seeds(const std::array<Utterance, 2>& pair, const SkillId& seed_dataset,
                                            const TfIdfIndex& index, const std::vector<ContextDoc>& corpus,
                                            const EngineConfig& cfg, const RoleTemplate& roles) {
  if (is_blank(pair[0].text) || is_blank(pair[1].text)) throw Error(ErrorCode::invalid_input, "build_seeds: blank seed text");
  if (index.doc_count() != corpus.size()) throw Error(ErrorCode::invalid_input, "build_seeds: index/corpus size mismatch");
  const auto& roster = cfg.skill_roster;
  const auto k = static_cast<std::size_t>(cfg.seeds_per_pair);
  const std::string query_text = pair[0].text + " " + pair[1].text;

  std::array<std::vector<std::vector<QueryHit>>, 2> buckets;
  std::size_t deepest = 0;
  for (std::size_t side = 0; side < 2; ++side) {
    buckets[side].resize(roster.size());
    for (std::size_t s = 0; s < roster.size(); ++s) {
      if (s >= roles.sources[side].size() || !roles.sources[side][s]) continue;
      buckets[side][s] = index.query(query_text, k, roster.ids()[s], roles.sources[side][s]);
      deepest = std::max(deepest, buckets[side][s].size());
    }
  }

  const std::size_t variants = std::max<std::size_t>(1, std::min(k, deepest));
  std::vector<SeedEpisode> out;
  for (std::size_t v = 0; v < variants; ++v) {
    SeedEpisode seed{seed_dataset, pair, {}, seed_dataset, static_cast<int>(v)};
    for (std::size_t side = 0; side < 2; ++side) {
      for (std::size_t s = 0; s < roster.size(); ++s) {
        const auto& hits = buckets[side][s];
        if (v >= hits.size()) continue;
        const auto& doc = corpus.at(static_cast<std::size_t>(hits[v].doc_id));
        if (doc.doc_id != hits[v].doc_id) throw Error(ErrorCode::invalid_input, "build_seeds: doc ids must equal corpus positions");
        seed.contexts[side].set(SkillContext{roster.at(s), doc.lines});
      }
    }
    out.push_back(std::move(seed));
  }
  return out;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent generator for work item `stream` under `seed`.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(seed ^ splitmix64(stream)));
}

// Unbiased draw from [0, n); identical on every standard library.
inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::invalid_input, "uniform_index: empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

struct SeedPair {
  std::array<Utterance, 2> pair;
  SkillId skill;

  friend bool operator==(const SeedPair&, const SeedPair&) = default;
};

// Draws seed pairs (dataset uniform over skills that have pairs, then pair
// uniform within it) and expands each into its retrieval variants until
// `count` seed episodes exist. Draw i uses its own derived stream.
inline std::vector<SeedEpisode> plan_seeds(const std::vector<SeedPair>& pairs, const TfIdfIndex& index,
                                           const std::vector<ContextDoc>& corpus, const EngineConfig& cfg,
                                           const RoleTemplate& roles, std::size_t count) {
  std::vector<std::vector<const SeedPair*>> by_skill(cfg.skill_roster.size());
  for (const auto& p : pairs) {
    if (!cfg.skill_roster.contains(p.skill)) throw Error(ErrorCode::roster, "seed pair skill '" + p.skill.id + "' not in roster");
    by_skill[p.skill.index].push_back(&p);
  }
  std::vector<std::size_t> nonempty;
  for (std::size_t s = 0; s < by_skill.size(); ++s) {
    if (!by_skill[s].empty()) nonempty.push_back(s);
  }
  std::vector<SeedEpisode> out;
  if (count == 0) return out;
  if (auto why = index_mismatch(index, corpus); !why.empty()) {
    throw Error(ErrorCode::invalid_input, "plan_seeds: index does not match the context corpus: " + why);
  }
  if (nonempty.empty()) throw Error(ErrorCode::invalid_input, "plan_seeds: no seed pairs available");

  for (std::uint64_t draw = 0; out.size() < count; ++draw) {
    auto rng = derive_stream(cfg.rng_seed, draw);
    const auto& bucket = by_skill[nonempty[uniform_index(rng, nonempty.size())]];
    const auto* chosen = bucket[uniform_index(rng, bucket.size())];
    for (auto& seed : build_seeds(chosen->pair, chosen->skill, index, corpus, cfg, roles)) {
      if (out.size() == count) break;
      out.push_back(std::move(seed));
    }
  }
  return out;
}

}  // namespace skillblend
