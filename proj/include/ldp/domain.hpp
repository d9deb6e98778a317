// Copyright 2026 The ldp-testing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDP_DOMAIN_HPP_
#define LDP_DOMAIN_HPP_

#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace ldp {

// A finite multi-feature type domain X = X^1 x ... x X^d together with the
// row-major bijection between joint indices in [T] and feature tuples.
// Feature 0 is the most significant coordinate of the joint index.
class DomainSpec {
 public:
  explicit DomainSpec(std::vector<int> feature_sizes)
      : sizes_(std::move(feature_sizes)) {
    if (sizes_.empty()) throw std::invalid_argument("DomainSpec: need at least one feature");
    for (int s : sizes_) {
      if (s < 2) throw std::invalid_argument("DomainSpec: every feature needs at least two types");
    }
    strides_.assign(sizes_.size(), 1);
    for (int j = static_cast<int>(sizes_.size()) - 2; j >= 0; --j) {
      strides_[j] = strides_[j + 1] * sizes_[j + 1];
    }
    total_ = strides_[0] * sizes_[0];
  }

  static DomainSpec single(int domain_size) { return DomainSpec(std::vector<int>{domain_size}); }

  int feature_count() const { return static_cast<int>(sizes_.size()); }
  int total() const { return total_; }
  int feature_size(int j) const {
    check_feature(j);
    return sizes_[j];
  }
  const std::vector<int>& feature_sizes() const { return sizes_; }

  int index_of(std::span<const int> tuple) const {
    if (tuple.size() != sizes_.size()) throw std::invalid_argument("index_of: tuple arity mismatch");
    int index = 0;
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
      if (tuple[j] < 0 || tuple[j] >= sizes_[j]) throw std::out_of_range("index_of: coordinate out of range");
      index += tuple[j] * strides_[j];
    }
    return index;
  }

  std::vector<int> tuple_of(int index) const {
    check_index(index);
    std::vector<int> tuple(sizes_.size());
    for (std::size_t j = 0; j < sizes_.size(); ++j) {
      tuple[j] = (index / strides_[j]) % sizes_[j];
    }
    return tuple;
  }

  // The j-th coordinate of a joint index, without materializing the tuple.
  int coordinate(int index, int j) const {
    check_index(index);
    check_feature(j);
    return (index / strides_[j]) % sizes_[j];
  }

 private:
  void check_feature(int j) const {
    if (j < 0 || j >= static_cast<int>(sizes_.size())) throw std::out_of_range("DomainSpec: feature index out of range");
  }
  void check_index(int index) const {
    if (index < 0 || index >= total_) throw std::out_of_range("DomainSpec: joint index out of range");
  }

  std::vector<int> sizes_;
  std::vector<int> strides_;
  int total_ = 0;
};

}  // namespace ldp

#endif  // LDP_DOMAIN_HPP_
