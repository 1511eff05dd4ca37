#include "posegan/reid.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace posegan {

using namespace nn;

EmbedHead::EmbedHead(ParamSet& ps, const std::string& prefix, int feature_dim, Rng& rng)
    : fc_(LinearLayer::make(ps, prefix + ".fc", feature_dim, kEmbedDim, rng)) {}

NodePtr EmbedHead::forward(const NodePtr& features) const { return fc_(features); }

Classifier::Classifier(ParamSet& ps, const std::string& prefix, int feature_dim, int num_classes, Rng& rng)
    : fc1_(LinearLayer::make(ps, prefix + ".fc1", feature_dim, 128, rng)),
      fc2_(LinearLayer::make(ps, prefix + ".fc2", 128, num_classes, rng)),
      bn_(BatchNorm::make(ps, prefix + ".norm", 128)),
      num_classes_(num_classes) {
    if (num_classes < 1) throw ConfigError("classifier: need at least one class");
}

NodePtr Classifier::forward(const NodePtr& features, bool training, Rng& dropout_rng) const {
    auto h = bn_(fc1_(features), training);
    if (training) {
        Tensor mask(h->value.shape());
        const long n = mask.numel();
        const double keep = 1.0 - dropout_rate_;
        for (long i = 0; i < n; ++i) mask[i] = dropout_rng.uniform() < keep ? 1.0 : 0.0;
        h = dropout(h, std::move(mask), keep);
    }
    return fc2_(relu(h));
}

Quartet sample_quartet(const std::vector<int>& pool_identity_ids, Rng& rng) {
    std::map<int, std::vector<int>> by_id;
    for (std::size_t i = 0; i < pool_identity_ids.size(); ++i)
        by_id[pool_identity_ids[i]].push_back(static_cast<int>(i));
    if (by_id.size() < 3)
        throw SamplingError("sample_quartet: need >= 3 identities in the pool, got " +
                            std::to_string(by_id.size()));
    std::vector<int> anchor_ids;
    for (const auto& [id, items] : by_id)
        if (items.size() >= 2) anchor_ids.push_back(id);
    if (anchor_ids.empty())
        throw SamplingError("sample_quartet: no identity has two distinct images for an anchor/positive pair");

    Quartet q;
    const int aid = anchor_ids[rng.uniform_int(anchor_ids.size())];
    const auto& a_items = by_id[aid];
    q.anchor = a_items[rng.uniform_int(a_items.size())];
    do {
        q.positive = a_items[rng.uniform_int(a_items.size())];
    } while (q.positive == q.anchor);

    std::vector<int> other_ids;
    for (const auto& [id, _] : by_id)
        if (id != aid) other_ids.push_back(id);
    const int n1_id = other_ids[rng.uniform_int(other_ids.size())];
    const auto& n1_items = by_id[n1_id];
    q.neg1 = n1_items[rng.uniform_int(n1_items.size())];

    std::vector<int> third_ids;
    for (int id : other_ids)
        if (id != n1_id) third_ids.push_back(id);
    const int n2_id = third_ids[rng.uniform_int(third_ids.size())];
    const auto& n2_items = by_id[n2_id];
    q.neg2 = n2_items[rng.uniform_int(n2_items.size())];
    return q;
}

namespace {
double sq_l2(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}
} // namespace

ReidMetrics evaluate(const std::vector<std::vector<double>>& query_embeddings,
                     const std::vector<int>& query_labels, const std::vector<int>& query_cams,
                     const std::vector<std::vector<double>>& gallery_embeddings,
                     const std::vector<int>& gallery_labels, const std::vector<int>& gallery_cams) {
    if (query_embeddings.empty() || gallery_embeddings.empty())
        throw DataError("evaluate: query and gallery must be nonempty");
    if (query_labels.size() != query_embeddings.size() || query_cams.size() != query_embeddings.size() ||
        gallery_labels.size() != gallery_embeddings.size() || gallery_cams.size() != gallery_embeddings.size())
        throw ShapeError("evaluate: embeddings/labels/cams size mismatch");
    const std::size_t dim = query_embeddings.front().size();
    for (const auto& e : query_embeddings)
        if (e.size() != dim) throw ShapeError("evaluate: inconsistent query embedding dimension");
    for (const auto& e : gallery_embeddings)
        if (e.size() != dim) throw ShapeError("evaluate: inconsistent gallery embedding dimension");

    ReidMetrics metrics;
    double rank1 = 0, rank5 = 0, rank10 = 0, ap_sum = 0;
    int used = 0;

    for (std::size_t qi = 0; qi < query_embeddings.size(); ++qi) {
        // Rank the gallery minus same-identity-same-camera entries.
        std::vector<std::pair<double, int>> ranked; // (distance, gallery index)
        ranked.reserve(gallery_embeddings.size());
        for (std::size_t gi = 0; gi < gallery_embeddings.size(); ++gi) {
            if (gallery_labels[gi] == query_labels[qi] && gallery_cams[gi] == query_cams[qi]) continue;
            ranked.emplace_back(sq_l2(query_embeddings[qi], gallery_embeddings[gi]), static_cast<int>(gi));
        }
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first < b.first;
            return a.second < b.second;
        });

        int relevant_total = 0;
        for (const auto& [_, gi] : ranked)
            if (gallery_labels[static_cast<std::size_t>(gi)] == query_labels[qi]) ++relevant_total;
        if (relevant_total == 0) {
            ++metrics.skipped_queries;
            continue;
        }
        ++used;

        int first_hit = -1;
        int hits = 0;
        double ap = 0;
        for (std::size_t r = 0; r < ranked.size(); ++r) {
            if (gallery_labels[static_cast<std::size_t>(ranked[r].second)] == query_labels[qi]) {
                if (first_hit < 0) first_hit = static_cast<int>(r);
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        ap /= relevant_total;
        ap_sum += ap;
        if (first_hit < 1) rank1 += 1;
        if (first_hit < 5) rank5 += 1;
        if (first_hit < 10) rank10 += 1;
    }

    if (used == 0) throw DataError("evaluate: every query was skipped (no valid gallery matches)");
    metrics.rank1 = rank1 / used;
    metrics.rank5 = rank5 / used;
    metrics.rank10 = rank10 / used;
    metrics.map = ap_sum / used;
    return metrics;
}

} // namespace posegan
