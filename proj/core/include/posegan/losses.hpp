#pragma once

#include <vector>

#include "posegan/autograd.hpp"

namespace posegan {

struct LossWeights {
    double gan = 5.0;
    double rec = 10.0;
    double semantic = 10.0;
    double quartet = 1.0;
    double id = 1.0;

    void validate() const;
};

struct Margins {
    double tau1 = 1.0;
    double tau2 = 0.5;

    // tau2 must be strictly less than tau1.
    void validate() const;
};

enum class QuartetForm {
    AsPrinted, // max{., tau} terms: loss is floored at tau1 + tau2
    Hinge,     // conventional max{. + tau1, 0} + max{d_ap - tau2, 0}
};

QuartetForm quartet_form_from_name(const std::string& name);

// Mean absolute difference between a generated image batch and ground truth.
nn::NodePtr recon_l1(const nn::NodePtr& generated, const nn::NodePtr& ground_truth);

// Mean absolute difference between condition and generated embeddings.
nn::NodePtr semantic_consistency(const nn::NodePtr& e_cond, const nn::NodePtr& e_gen);

// Quartet verification loss over embedding batches [N,D] with squared-L2
// distances, mean-reduced over the batch:
//   term1 = max{ d(a,p) - d(a,n1) + d(a,p) - d(n2,n1), tau1 }
//   term2 = max{ d(a,p), tau2 }
nn::NodePtr quartet_loss(const nn::NodePtr& anchor, const nn::NodePtr& positive, const nn::NodePtr& neg1,
                         const nn::NodePtr& neg2, const Margins& margins,
                         QuartetForm form = QuartetForm::AsPrinted);

// Mean -log softmax(logits)[label] over the batch.
nn::NodePtr id_loss(const nn::NodePtr& logits, const std::vector<int>& labels);

// Per-step component values as logged by the trainer.
struct LossComponents {
    double gan_appearance = 0; // Eq. value E[log D_I(real) + log(1 - D_I(fake))]
    double gan_pose = 0;
    double rec = 0;
    double semantic = 0;
    double quartet = 0;
    double id = 0;
};

// lambda_GAN * (L_gan_I + L_gan_P) + lambda_R * L_R + lambda_S * L_S +
// lambda_quartet * L_quartet + lambda_id * L_id.
double total_loss(const LossComponents& c, const LossWeights& w);

} // namespace posegan
