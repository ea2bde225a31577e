#pragma once

// Maximal-clique enumeration (Bron-Kerbosch with Tomita pivoting) over
// dynamic bitsets, with a node budget and an optional branch pruner.

#include <bit>
#include <cstdint>
#include <vector>

namespace lmms::detail {

class Bitset {
 public:
  Bitset() = default;
  explicit Bitset(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  std::size_t size() const noexcept { return n_; }
  void set(std::size_t i) { words_[i / 64] |= std::uint64_t{1} << (i % 64); }
  void reset(std::size_t i) { words_[i / 64] &= ~(std::uint64_t{1} << (i % 64)); }
  bool test(std::size_t i) const { return (words_[i / 64] >> (i % 64)) & 1U; }

  bool none() const {
    for (auto w : words_)
      if (w) return false;
    return true;
  }
  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }
  Bitset operator&(const Bitset& o) const {
    Bitset r = *this;
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] &= o.words_[k];
    return r;
  }
  Bitset operator|(const Bitset& o) const {
    Bitset r = *this;
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] |= o.words_[k];
    return r;
  }
  Bitset minus(const Bitset& o) const {
    Bitset r = *this;
    for (std::size_t k = 0; k < words_.size(); ++k) r.words_[k] &= ~o.words_[k];
    return r;
  }
  std::size_t intersect_count(const Bitset& o) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < words_.size(); ++k)
      c += static_cast<std::size_t>(std::popcount(words_[k] & o.words_[k]));
    return c;
  }

  template <class F>
  void for_each(F&& f) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w) {
        const auto bit = static_cast<std::size_t>(std::countr_zero(w));
        f(k * 64 + bit);
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

  bool operator==(const Bitset&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

enum class EnumerationStatus { complete, stopped, budget_exhausted };

struct CliqueEnumerator {
  const std::vector<Bitset>* adjacency = nullptr;
  std::size_t node_limit = 0;
  std::size_t nodes = 0;

  // visit(R) -> false stops the enumeration. prune(R, P) -> true skips the
  // branch (e.g. R u P cannot satisfy a covering requirement).
  template <class Visit, class Prune>
  EnumerationStatus run(Visit&& visit, Prune&& prune) {
    const std::size_t n = adjacency->size();
    Bitset r(n), p(n), x(n);
    for (std::size_t i = 0; i < n; ++i) p.set(i);
    nodes = 0;
    return expand(r, p, x, visit, prune);
  }

 private:
  template <class Visit, class Prune>
  EnumerationStatus expand(Bitset& r, Bitset p, Bitset x, Visit& visit, Prune& prune) {
    if (node_limit && ++nodes > node_limit) return EnumerationStatus::budget_exhausted;
    if (prune(r, p)) return EnumerationStatus::complete;
    if (p.none() && x.none()) {
      return visit(r) ? EnumerationStatus::complete : EnumerationStatus::stopped;
    }
    // Pivot maximizing |P & N(u)| over u in P | X.
    std::size_t pivot = 0, best = 0;
    bool have = false;
    (p | x).for_each([&](std::size_t u) {
      const std::size_t c = p.intersect_count((*adjacency)[u]);
      if (!have || c > best) {
        pivot = u;
        best = c;
        have = true;
      }
    });
    const Bitset candidates = p.minus((*adjacency)[pivot]);
    for (std::size_t v : candidates.indices()) {
      r.set(v);
      const auto status = expand(r, p & (*adjacency)[v], x & (*adjacency)[v], visit, prune);
      r.reset(v);
      if (status != EnumerationStatus::complete) return status;
      p.reset(v);
      x.set(v);
    }
    return EnumerationStatus::complete;
  }
};

}  // namespace lmms::detail
