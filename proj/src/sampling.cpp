#include "hhe/sampling.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "hhe/error.hpp"

namespace hhe {
namespace {

void check_pn(std::size_t p, std::size_t n) {
    if (p < 2) throw InvalidConfigError("pk sampling needs P >= 2");
    if (n < 2) throw InvalidConfigError("pk sampling needs N >= 2");
}

// N samples from one identity group, without replacement while possible.
void sample_group(const std::vector<std::size_t>& group, std::size_t n, std::mt19937_64& rng,
                  std::vector<std::size_t>& out) {
    if (group.size() >= n) {
        std::sample(group.begin(), group.end(), std::back_inserter(out), n, rng);
        return;
    }
    out.insert(out.end(), group.begin(), group.end());
    std::uniform_int_distribution<std::size_t> pick(0, group.size() - 1);
    for (std::size_t k = group.size(); k < n; ++k) out.push_back(group[pick(rng)]);
}

PKBatch batch_for_identities(const IdentityGroups& groups,
                             std::span<const std::size_t> identity_ids, std::size_t n,
                             std::mt19937_64& rng) {
    PKBatch batch;
    batch.num_identities = identity_ids.size();
    batch.samples_per_identity = n;
    batch.indices.reserve(identity_ids.size() * n);
    for (std::size_t id : identity_ids) {
        sample_group(groups.groups()[id], n, rng, batch.indices);
    }
    return batch;
}

}  // namespace

IdentityGroups::IdentityGroups(std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    labels_.reserve(by_label.size());
    groups_.reserve(by_label.size());
    for (auto& [label, members] : by_label) {
        labels_.push_back(label);
        groups_.push_back(std::move(members));
    }
}

PKBatch pk_sample(const IdentityGroups& groups, std::size_t p, std::size_t n,
                  std::mt19937_64& rng) {
    check_pn(p, n);
    if (groups.num_identities() < p) {
        throw InsufficientIdentitiesError("pk_sample: " + std::to_string(p) +
                                          " identities requested, dataset has " +
                                          std::to_string(groups.num_identities()));
    }
    std::vector<std::size_t> all(groups.num_identities());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    std::vector<std::size_t> chosen;
    chosen.reserve(p);
    std::sample(all.begin(), all.end(), std::back_inserter(chosen), p, rng);
    return batch_for_identities(groups, chosen, n, rng);
}

std::vector<PKBatch> epoch_batches(const IdentityGroups& groups, std::size_t p, std::size_t n,
                                   std::mt19937_64& rng) {
    check_pn(p, n);
    const std::size_t total = groups.num_identities();
    if (total < p) {
        throw InsufficientIdentitiesError("epoch_batches: " + std::to_string(p) +
                                          " identities per batch, dataset has " +
                                          std::to_string(total));
    }
    std::vector<std::size_t> order(total);
    for (std::size_t i = 0; i < total; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<PKBatch> out;
    out.reserve((total + p - 1) / p);
    for (std::size_t start = 0; start < total; start += p) {
        const std::size_t end = std::min(start + p, total);
        std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                     order.begin() + static_cast<std::ptrdiff_t>(end));
        if (ids.size() < p) {
            // Pad the final short group with identities scheduled earlier
            // this epoch, keeping the P identities of the batch distinct.
            std::sample(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(start),
                        std::back_inserter(ids), p - ids.size(), rng);
        }
        out.push_back(batch_for_identities(groups, ids, n, rng));
    }
    return out;
}

}  // namespace hhe
