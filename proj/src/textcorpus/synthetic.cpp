#include "chunkfb/textcorpus/synthetic.hpp"

#include <set>
#include <unordered_set>

#include "chunkfb/error.hpp"

namespace chunkfb::text {

namespace {

int word_index(const std::string& w) {
  if (w.size() < 2 || w[0] != 's') return -1;
  int k = 0;
  for (std::size_t i = 1; i < w.size(); ++i) {
    if (w[i] < '0' || w[i] > '9') return -1;
    k = k * 10 + (w[i] - '0');
  }
  return k;
}

void check_prob(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string("synthetic task: ") + name + " must be in [0,1]");
}

}  // namespace

void SyntheticTaskSpec::resolve() {
  if (ood_lexicon.empty()) {
    for (int k = 0; k < source_vocab_size; ++k) {
      if (!is_in_domain_only(k)) ood_lexicon[source_word(k)] = "t" + std::to_string(k);
    }
  }
  if (id_overrides.empty()) {
    for (int k = 0; k < source_vocab_size; ++k) {
      if (is_ambiguous(k)) id_overrides[source_word(k)] = "t" + std::to_string(k) + "'";
      if (is_in_domain_only(k)) id_overrides[source_word(k)] = "t" + std::to_string(k);
    }
  }
  validate();
}

void SyntheticTaskSpec::validate() const {
  if (source_vocab_size < 1) throw Error("synthetic task: source_vocab_size must be >= 1");
  if (ambiguous_count < 0 || cue_count < 0 || in_domain_only_count < 0) {
    throw Error("synthetic task: word class counts must be non-negative");
  }
  if (ambiguous_count + cue_count + in_domain_only_count >= source_vocab_size) {
    throw Error("synthetic task: ambiguous + cue + in-domain-only words leave no regular words");
  }
  if (ambiguous_count > 0 && cue_count == 0 && ood_cue_rate > 0.0) {
    throw Error("synthetic task: ood_cue_rate > 0 needs cue words");
  }
  if (min_length < 2 || max_length < min_length) {
    throw Error("synthetic task: need 2 <= min_length <= max_length");
  }
  if (ood_train_size < 1 || id_train_size < 1 || id_test_size < 1) {
    throw Error("synthetic task: split sizes must be >= 1");
  }
  if (marker.empty() || word_index(marker) >= 0) {
    throw Error("synthetic task: marker must be a non-empty token distinct from source words");
  }
  check_prob(marker_prob, "marker_prob");
  check_prob(ood_ambiguous_rate, "ood_ambiguous_rate");
  check_prob(id_ambiguous_rate, "id_ambiguous_rate");
  check_prob(id_only_rate, "id_only_rate");
  check_prob(ood_cue_rate, "ood_cue_rate");
  check_prob(id_cue_rate, "id_cue_rate");
  check_prob(ood_cue_alt_prob, "ood_cue_alt_prob");
  check_prob(ood_plain_alt_prob, "ood_plain_alt_prob");
  if (id_ambiguous_rate + id_only_rate > 1.0) {
    throw Error("synthetic task: id_ambiguous_rate + id_only_rate exceeds 1");
  }

  for (int k = 0; k < source_vocab_size; ++k) {
    const std::string s = source_word(k);
    const auto ood = ood_lexicon.find(s);
    const auto over = id_overrides.find(s);
    if (is_in_domain_only(k)) {
      if (ood != ood_lexicon.end()) throw Error("synthetic task: in-domain-only word " + s + " has an out-of-domain translation");
      if (over == id_overrides.end()) throw Error("synthetic task: in-domain-only word " + s + " has no in-domain translation");
      continue;
    }
    if (ood == ood_lexicon.end()) throw Error("synthetic task: no out-of-domain translation for " + s);
    if (is_ambiguous(k)) {
      if (over == id_overrides.end()) throw Error("synthetic task: ambiguous word " + s + " has no in-domain sense");
      if (over->second == ood->second) throw Error("synthetic task: ambiguous word " + s + " has identical senses");
    } else if (over != id_overrides.end() && over->second != ood->second) {
      throw Error("synthetic task: override for non-ambiguous word " + s);
    }
  }
  for (const auto& [s, t] : ood_lexicon) {
    const int k = word_index(s);
    if (k < 0 || k >= source_vocab_size) throw Error("synthetic task: unknown source word " + s);
  }
  for (const auto& [s, t] : id_overrides) {
    const int k = word_index(s);
    if (k < 0 || k >= source_vocab_size) throw Error("synthetic task: unknown source word " + s);
  }
}

std::vector<std::pair<std::string, std::pair<std::string, std::string>>>
SyntheticTaskSpec::ambiguous_senses() const {
  std::vector<std::pair<std::string, std::pair<std::string, std::string>>> out;
  for (int k = 0; k < ambiguous_count; ++k) {
    const std::string s = source_word(k);
    out.push_back({s, {ood_lexicon.at(s), id_overrides.at(s)}});
  }
  return out;
}

KeyValueConfig SyntheticTaskSpec::to_config() const {
  KeyValueConfig c;
  c.set("source_vocab_size", std::to_string(source_vocab_size));
  c.set("ambiguous_count", std::to_string(ambiguous_count));
  c.set("cue_count", std::to_string(cue_count));
  c.set("in_domain_only_count", std::to_string(in_domain_only_count));
  c.set("marker", marker);
  c.set("min_length", std::to_string(min_length));
  c.set("max_length", std::to_string(max_length));
  c.set("ood_train_size", std::to_string(ood_train_size));
  c.set("id_train_size", std::to_string(id_train_size));
  c.set("id_test_size", std::to_string(id_test_size));
  c.set("seed", std::to_string(seed));
  c.set("marker_prob", format_double(marker_prob));
  c.set("ood_ambiguous_rate", format_double(ood_ambiguous_rate));
  c.set("id_ambiguous_rate", format_double(id_ambiguous_rate));
  c.set("id_only_rate", format_double(id_only_rate));
  c.set("ood_cue_rate", format_double(ood_cue_rate));
  c.set("id_cue_rate", format_double(id_cue_rate));
  c.set("ood_cue_alt_prob", format_double(ood_cue_alt_prob));
  c.set("ood_plain_alt_prob", format_double(ood_plain_alt_prob));
  SyntheticTaskSpec defaults = *this;
  defaults.ood_lexicon.clear();
  defaults.id_overrides.clear();
  defaults.resolve();
  for (const auto& [s, t] : ood_lexicon) {
    const auto it = defaults.ood_lexicon.find(s);
    if (it == defaults.ood_lexicon.end() || it->second != t) c.set("ood." + s, t);
  }
  for (const auto& [s, t] : id_overrides) {
    const auto it = defaults.id_overrides.find(s);
    if (it == defaults.id_overrides.end() || it->second != t) c.set("id." + s, t);
  }
  return c;
}

SyntheticTaskSpec SyntheticTaskSpec::from_config(const KeyValueConfig& c) {
  SyntheticTaskSpec s;
  s.source_vocab_size = static_cast<int>(c.get_int("source_vocab_size", s.source_vocab_size));
  s.ambiguous_count = static_cast<int>(c.get_int("ambiguous_count", s.ambiguous_count));
  s.cue_count = static_cast<int>(c.get_int("cue_count", s.cue_count));
  s.in_domain_only_count = static_cast<int>(c.get_int("in_domain_only_count", s.in_domain_only_count));
  s.marker = c.get("marker", s.marker);
  s.min_length = static_cast<int>(c.get_int("min_length", s.min_length));
  s.max_length = static_cast<int>(c.get_int("max_length", s.max_length));
  s.ood_train_size = static_cast<int>(c.get_int("ood_train_size", s.ood_train_size));
  s.id_train_size = static_cast<int>(c.get_int("id_train_size", s.id_train_size));
  s.id_test_size = static_cast<int>(c.get_int("id_test_size", s.id_test_size));
  s.seed = c.get_uint64("seed", s.seed);
  s.marker_prob = c.get_double("marker_prob", s.marker_prob);
  s.ood_ambiguous_rate = c.get_double("ood_ambiguous_rate", s.ood_ambiguous_rate);
  s.id_ambiguous_rate = c.get_double("id_ambiguous_rate", s.id_ambiguous_rate);
  s.id_only_rate = c.get_double("id_only_rate", s.id_only_rate);
  s.ood_cue_rate = c.get_double("ood_cue_rate", s.ood_cue_rate);
  s.id_cue_rate = c.get_double("id_cue_rate", s.id_cue_rate);
  s.ood_cue_alt_prob = c.get_double("ood_cue_alt_prob", s.ood_cue_alt_prob);
  s.ood_plain_alt_prob = c.get_double("ood_plain_alt_prob", s.ood_plain_alt_prob);

  SyntheticTaskSpec defaults = s;
  defaults.resolve();
  s.ood_lexicon = defaults.ood_lexicon;
  s.id_overrides = defaults.id_overrides;
  for (const auto& [k, v] : c.values()) {
    if (k.rfind("ood.", 0) == 0) s.ood_lexicon[k.substr(4)] = v;
    if (k.rfind("id.", 0) == 0) s.id_overrides[k.substr(3)] = v;
  }
  s.validate();
  return s;
}

std::vector<std::string> translate_words(const SyntheticTaskSpec& spec,
                                         const std::vector<std::string>& source, Domain domain,
                                         Rng& rng) {
  std::vector<std::string> target;
  int swap_at = -1;
  int prev = -1;
  for (const auto& w : source) {
    if (w == spec.marker) {
      swap_at = static_cast<int>(target.size());
      continue;
    }
    const int k = word_index(w);
    if (k < 0 || k >= spec.source_vocab_size) throw Error("synthetic task: unknown source word " + w);
    std::string t;
    if (domain == Domain::kInDomain) {
      const auto over = spec.id_overrides.find(w);
      t = over != spec.id_overrides.end() ? over->second : spec.ood_lexicon.at(w);
    } else {
      const auto ood = spec.ood_lexicon.find(w);
      if (ood == spec.ood_lexicon.end()) {
        throw Error("synthetic task: " + w + " has no out-of-domain translation");
      }
      t = ood->second;
      if (spec.is_ambiguous(k)) {
        const double p = (prev >= 0 && spec.is_cue(prev)) ? spec.ood_cue_alt_prob : spec.ood_plain_alt_prob;
        if (p > 0.0 && rng.bernoulli(p)) t = spec.id_overrides.at(w);
      }
    }
    target.push_back(std::move(t));
    prev = k;
  }
  if (swap_at >= 0 && swap_at + 1 < static_cast<int>(target.size())) {
    std::swap(target[static_cast<std::size_t>(swap_at)], target[static_cast<std::size_t>(swap_at) + 1]);
  }
  return target;
}

namespace {

struct WordPools {
  std::vector<int> ambiguous, cue, regular, in_domain_only;
};

std::vector<std::string> sample_source(const SyntheticTaskSpec& spec, const WordPools& pools,
                                       Domain domain, Rng& rng) {
  const bool in_domain = domain == Domain::kInDomain;
  const int length = spec.min_length + static_cast<int>(rng.index(
                                           static_cast<std::size_t>(spec.max_length - spec.min_length + 1)));
  const double amb_rate = in_domain ? spec.id_ambiguous_rate : spec.ood_ambiguous_rate;
  const double only_rate = in_domain ? spec.id_only_rate : 0.0;
  const double cue_rate = in_domain ? spec.id_cue_rate : spec.ood_cue_rate;

  std::vector<std::string> words;
  while (static_cast<int>(words.size()) < length) {
    const double r = rng.uniform();
    if (r < only_rate && !pools.in_domain_only.empty()) {
      words.push_back(spec.source_word(pools.in_domain_only[rng.index(pools.in_domain_only.size())]));
    } else if (r < only_rate + amb_rate && !pools.ambiguous.empty()) {
      const int a = pools.ambiguous[rng.index(pools.ambiguous.size())];
      if (!pools.cue.empty() && static_cast<int>(words.size()) + 2 <= length && rng.bernoulli(cue_rate)) {
        words.push_back(spec.source_word(pools.cue[rng.index(pools.cue.size())]));
      }
      words.push_back(spec.source_word(a));
    } else {
      words.push_back(spec.source_word(pools.regular[rng.index(pools.regular.size())]));
    }
  }
  if (length >= 2 && rng.bernoulli(spec.marker_prob)) {
    const std::size_t pos = rng.index(static_cast<std::size_t>(length - 1));
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos), spec.marker);
  }
  return words;
}

}  // namespace

SyntheticTask generate_synthetic_task(SyntheticTaskSpec spec) {
  spec.resolve();

  WordPools pools;
  for (int k = 0; k < spec.source_vocab_size; ++k) {
    if (spec.is_ambiguous(k)) pools.ambiguous.push_back(k);
    else if (spec.is_cue(k)) pools.cue.push_back(k);
    else if (spec.is_in_domain_only(k)) pools.in_domain_only.push_back(k);
    else pools.regular.push_back(k);
  }

  SyntheticTask task;
  task.spec = spec;
  for (int k = 0; k < spec.source_vocab_size; ++k) task.src_vocab.add(spec.source_word(k));
  task.src_vocab.add(spec.marker);
  std::set<std::string> targets;
  for (const auto& [s, t] : spec.ood_lexicon) targets.insert(t);
  for (const auto& [s, t] : spec.id_overrides) targets.insert(t);
  // Numeric order of the source index keeps the target vocabulary readable.
  for (int k = 0; k < spec.source_vocab_size; ++k) {
    const std::string s = spec.source_word(k);
    if (auto it = spec.ood_lexicon.find(s); it != spec.ood_lexicon.end()) task.tgt_vocab.add(it->second);
    if (auto it = spec.id_overrides.find(s); it != spec.id_overrides.end()) task.tgt_vocab.add(it->second);
  }
  for (const auto& t : targets) task.tgt_vocab.add(t);

  Rng rng(spec.seed);
  std::unordered_set<std::string> seen;
  auto fill = [&](ParallelCorpus& corpus, Domain domain, int count) {
    corpus.domain = domain;
    corpus.pairs.reserve(static_cast<std::size_t>(count));
    int attempts = 0;
    const int max_attempts = 100 * count + 1000;
    while (static_cast<int>(corpus.pairs.size()) < count) {
      if (++attempts > max_attempts) {
        throw Error("synthetic task: cannot draw " + std::to_string(count) + " distinct " +
                    domain_name(domain) + " sentences");
      }
      auto source = sample_source(spec, pools, domain, rng);
      const std::string key = join_tokens(source);
      if (!seen.insert(key).second) continue;
      const auto target = translate_words(spec, source, domain, rng);
      SentencePair pair;
      for (const auto& w : source) pair.source.push_back(task.src_vocab.encode(w));
      for (const auto& w : target) pair.target.push_back(task.tgt_vocab.encode(w));
      corpus.pairs.push_back(std::move(pair));
    }
  };
  fill(task.ood_train, Domain::kOutOfDomain, spec.ood_train_size);
  fill(task.id_train, Domain::kInDomain, spec.id_train_size);
  fill(task.id_test, Domain::kInDomain, spec.id_test_size);
  return task;
}

}  // namespace chunkfb::text
