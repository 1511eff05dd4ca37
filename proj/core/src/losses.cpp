#include "posegan/losses.hpp"

namespace posegan {

using namespace nn;

void LossWeights::validate() const {
    if (gan < 0 || rec < 0 || semantic < 0 || quartet < 0 || id < 0)
        throw ConfigError("loss weights must be nonnegative");
}

void Margins::validate() const {
    if (tau1 < 0 || tau2 < 0) throw ConfigError("margins must be nonnegative");
    if (!(tau2 < tau1))
        throw ConfigError("margin order violated: tau2 (" + std::to_string(tau2) + ") must be < tau1 (" +
                          std::to_string(tau1) + ")");
}

QuartetForm quartet_form_from_name(const std::string& name) {
    if (name == "as_printed") return QuartetForm::AsPrinted;
    if (name == "hinge") return QuartetForm::Hinge;
    throw ConfigError("unknown quartet_form: " + name + " (expected as_printed or hinge)");
}

NodePtr recon_l1(const NodePtr& generated, const NodePtr& ground_truth) {
    require_same_shape(generated->value, ground_truth->value, "recon_l1");
    return mean_all(abs_elem(sub(generated, ground_truth)));
}

NodePtr semantic_consistency(const NodePtr& e_cond, const NodePtr& e_gen) {
    require_same_shape(e_cond->value, e_gen->value, "semantic_consistency");
    return mean_all(abs_elem(sub(e_cond, e_gen)));
}

namespace {
NodePtr squared_l2_rows(const NodePtr& a, const NodePtr& b) {
    return sum_rows(square(sub(a, b))); // [N]
}
} // namespace

NodePtr quartet_loss(const NodePtr& anchor, const NodePtr& positive, const NodePtr& neg1, const NodePtr& neg2,
                     const Margins& margins, QuartetForm form) {
    margins.validate();
    require_same_shape(anchor->value, positive->value, "quartet_loss");
    require_same_shape(anchor->value, neg1->value, "quartet_loss");
    require_same_shape(anchor->value, neg2->value, "quartet_loss");
    if (anchor->value.ndim() != 2) throw ShapeError("quartet_loss: embeddings must be [N,D]");

    auto d_ap = squared_l2_rows(anchor, positive);
    auto d_an1 = squared_l2_rows(anchor, neg1);
    auto d_n2n1 = squared_l2_rows(neg2, neg1);
    auto spread = add(sub(d_ap, d_an1), sub(d_ap, d_n2n1));

    NodePtr term1, term2;
    if (form == QuartetForm::AsPrinted) {
        term1 = max_scalar(spread, margins.tau1);
        term2 = max_scalar(d_ap, margins.tau2);
    } else {
        term1 = max_scalar(add_scalar(spread, margins.tau1), 0.0);
        term2 = max_scalar(add_scalar(d_ap, -margins.tau2), 0.0);
    }
    return mean_all(add(term1, term2));
}

NodePtr id_loss(const NodePtr& logits, const std::vector<int>& labels) {
    return softmax_cross_entropy(logits, labels);
}

double total_loss(const LossComponents& c, const LossWeights& w) {
    w.validate();
    return w.gan * (c.gan_appearance + c.gan_pose) + w.rec * c.rec + w.semantic * c.semantic +
           w.quartet * c.quartet + w.id * c.id;
}

} // namespace posegan
