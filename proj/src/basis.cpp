#include "qftlab/basis.hpp"

#include <algorithm>
#include <cstdlib>

namespace qftlab {

std::size_t TruncationParams::dimension_cap() {
  if (const char* env = std::getenv("QFTLAB_DIM_CAP")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return 20000;
}

void TruncationParams::validate() const {
  if (!(mass > 0.0)) throw ConfigInvalid("truncation.mass: must be > 0");
  if (!(box_length > 0.0)) throw ConfigInvalid("truncation.box_length: must be > 0");
  if (mode_cutoff < 0) throw ConfigInvalid("truncation.mode_cutoff: must be >= 0");
  if (n_max < 1) throw ConfigInvalid("truncation.n_max: must be >= 1");
  if (x_points < 1) throw ConfigInvalid("truncation.x_points: must be >= 1");
}

std::size_t basis_dimension(int modes, int n_max) {
  // C(modes + n_max, n_max) accumulated as a product; saturates rather than
  // overflowing so the cap check stays meaningful.
  long double acc = 1.0L;
  for (int i = 1; i <= n_max; ++i) acc *= static_cast<long double>(modes + i) / i;
  const long double rounded = acc + 0.5L;
  if (rounded > 1e18L) return static_cast<std::size_t>(1e18);
  return static_cast<std::size_t>(rounded);
}

namespace {

std::string occ_key(const std::vector<int>& occ) {
  std::string key;
  key.reserve(occ.size());
  for (int n : occ) key.push_back(static_cast<char>(n));
  return key;
}

void enumerate_with_total(int modes, int total, std::vector<int>& scratch, int pos, int left,
                          std::vector<std::vector<int>>& out) {
  if (pos == modes - 1) {
    scratch[static_cast<std::size_t>(pos)] = left;
    out.push_back(scratch);
    return;
  }
  for (int n = 0; n <= left; ++n) {
    scratch[static_cast<std::size_t>(pos)] = n;
    enumerate_with_total(modes, total, scratch, pos + 1, left - n, out);
  }
}

}  // namespace

OccupationBasis::OccupationBasis(int modes, int n_max) : modes_(modes), n_max_(n_max) {
  std::vector<int> scratch(static_cast<std::size_t>(modes));
  for (int total = 0; total <= n_max; ++total) {
    enumerate_with_total(modes, total, scratch, 0, total, states_);
  }
  totals_.reserve(states_.size());
  index_.reserve(states_.size());
  for (std::size_t i = 0; i < states_.size(); ++i) {
    int sum = 0;
    for (int n : states_[i]) sum += n;
    totals_.push_back(sum);
    index_.emplace(occ_key(states_[i]), static_cast<Index>(i));
  }
}

Index OccupationBasis::index_of(const std::vector<int>& occ) const {
  const auto it = index_.find(occ_key(occ));
  return it == index_.end() ? Index{-1} : it->second;
}

int OccupationBasis::mode_column(int j) const {
  const int k = (modes_ - 1) / 2;
  if (j < -k || j > k) throw ModeOutOfRange("mode index " + std::to_string(j) + " outside [-" +
                                            std::to_string(k) + "," + std::to_string(k) + "]");
  return j + k;
}

std::uint64_t OccupationBasis::hash() const {
  std::uint64_t h = fnv1a(&modes_, sizeof(modes_));
  h = fnv1a(&n_max_, sizeof(n_max_), h);
  for (const auto& s : states_) h = fnv1a(s.data(), s.size() * sizeof(int), h);
  return h;
}

OccupationBasis build_basis(const TruncationParams& params) {
  params.validate();
  const std::size_t dim = basis_dimension(params.modes(), params.n_max);
  const std::size_t cap = TruncationParams::dimension_cap();
  if (dim > cap) {
    throw DimensionCapExceeded("basis dimension " + std::to_string(dim) + " exceeds cap " +
                               std::to_string(cap));
  }
  return OccupationBasis(params.modes(), params.n_max);
}

}  // namespace qftlab
