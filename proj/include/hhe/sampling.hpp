#pragma once

#include <random>
#include <span>
#include <vector>

namespace hhe {

// A P-identities x N-samples mini-batch. indices holds P*N dataset
// positions grouped by identity: group g occupies [g*N, (g+1)*N).
struct PKBatch {
    std::size_t num_identities = 0;       // P
    std::size_t samples_per_identity = 0; // N
    std::vector<std::size_t> indices;
};

// Dataset positions grouped by identity label, labels in ascending order.
class IdentityGroups {
  public:
    explicit IdentityGroups(std::span<const int> labels);

    std::size_t num_identities() const { return groups_.size(); }
    const std::vector<int>& identity_labels() const { return labels_; }
    const std::vector<std::vector<std::size_t>>& groups() const { return groups_; }

  private:
    std::vector<int> labels_;
    std::vector<std::vector<std::size_t>> groups_;
};

// P identities uniformly without replacement; within an identity, samples
// without replacement when it has >= N, otherwise all of them plus
// with-replacement fills. Throws InsufficientIdentitiesError when the
// dataset has fewer than P identities.
PKBatch pk_sample(const IdentityGroups& groups, std::size_t p, std::size_t n,
                  std::mt19937_64& rng);

// ceil(I/P) batches covering every identity at least once per epoch; the
// final short group is padded with identities already used earlier in the
// epoch. Order reshuffles per call.
std::vector<PKBatch> epoch_batches(const IdentityGroups& groups, std::size_t p, std::size_t n,
                                   std::mt19937_64& rng);

}  // namespace hhe
