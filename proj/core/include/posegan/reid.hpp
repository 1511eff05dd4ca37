#pragma once

#include <vector>

#include "posegan/layers.hpp"

namespace posegan {

inline constexpr int kEmbedDim = 128;

// Theta_w: single affine layer mapping the backbone feature vector to the
// 128-dim embedding used by the quartet loss and evaluation.
class EmbedHead {
public:
    EmbedHead(nn::ParamSet& ps, const std::string& prefix, int feature_dim, Rng& rng);
    nn::NodePtr forward(const nn::NodePtr& features) const; // [N,128]

private:
    nn::LinearLayer fc_;
};

// Identity classifier: FC to 128, batch norm, dropout 0.5, ReLU, FC to the
// number of training identities. Dropout draws from the supplied stream and
// is active only in training mode.
class Classifier {
public:
    Classifier(nn::ParamSet& ps, const std::string& prefix, int feature_dim, int num_classes, Rng& rng);
    nn::NodePtr forward(const nn::NodePtr& features, bool training, Rng& dropout_rng) const; // [N,K]
    int num_classes() const { return num_classes_; }

private:
    nn::LinearLayer fc1_, fc2_;
    nn::BatchNorm bn_;
    int num_classes_;
    double dropout_rate_ = 0.5;
};

// Quartet of indices into an image pool: same identity for anchor/positive
// (distinct images), neg1 from a different identity, neg2 from a third.
struct Quartet {
    int anchor = -1;
    int positive = -1;
    int neg1 = -1;
    int neg2 = -1;
};

// Uniform quartet selection over a pool described by per-item identity
// labels. Requires at least 3 distinct identities and at least one identity
// with two images; throws SamplingError otherwise.
Quartet sample_quartet(const std::vector<int>& pool_identity_ids, Rng& rng);

struct ReidMetrics {
    double rank1 = 0;
    double rank5 = 0;
    double rank10 = 0;
    double map = 0;
    int skipped_queries = 0;
};

// Single-query CMC/mAP protocol: gallery ranked by ascending squared-L2
// distance (ties broken by gallery index), gallery entries sharing both the
// query identity and camera are excluded, AP is precision at each relevant
// hit. Queries with no valid match left are counted in skipped_queries.
ReidMetrics evaluate(const std::vector<std::vector<double>>& query_embeddings,
                     const std::vector<int>& query_labels, const std::vector<int>& query_cams,
                     const std::vector<std::vector<double>>& gallery_embeddings,
                     const std::vector<int>& gallery_labels, const std::vector<int>& gallery_cams);

} // namespace posegan
