#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eoslab/dataset.hpp"
#include "eoslab/linalg.hpp"

namespace eos {

enum class Activation { Linear, Tanh, Relu, Elu };

Activation parse_activation(const std::string& s);
std::string to_string(Activation a);

// f(x) = output_scale * W_L s(W_{L-1} ... s(W_1 x)), no biases
struct MlpNet {
    std::vector<Matrix> layers;  // layer l is width_l x width_{l-1}
    Activation activation = Activation::Linear;
    std::vector<bool> freezeMask;
    double output_scale = 1.0;

    std::size_t depth() const { return layers.size(); }
    std::size_t param_count() const;
    std::vector<std::size_t> dims() const;
};

struct ForwardCache {
    std::vector<Matrix> Z;  // pre-activations per layer, width_l x n
    std::vector<Matrix> H;  // H[l] is the input of layer l, H[0] = X
    Vec F;
};

struct LossGrads {
    double loss = 0.0;
    std::vector<Matrix> grads;
    Vec F;
    Vec D;
};

struct GramSplit {
    Matrix M;
    Matrix M_A;
    Matrix M_W;
};

MlpNet init_mlp(const std::vector<std::size_t>& dims, Activation act, std::uint64_t seed, double init_scale = 1.0);
ForwardCache forward_cached(const MlpNet& net, const Matrix& X);
LossGrads loss_and_grads(const MlpNet& net, const Dataset& ds);
double grad_check(const MlpNet& net, const Dataset& ds, double h = 1e-3, std::size_t samples = 64,
                  std::uint64_t seed = 7);
Matrix jacobian(const MlpNet& net, const Matrix& X);
GramSplit gram_split(const MlpNet& net, const Matrix& X);
MlpNet gd_step_mlp(const MlpNet& net, const std::vector<Matrix>& grads, double eta,
                   const std::vector<bool>& freezeMask);

// freeze the k layers nearest the output
std::vector<bool> freeze_outer(std::size_t depth, std::size_t k);
double output_norm2(const MlpNet& net);  // squared Frobenius norm of the last layer
Vec flatten(const std::vector<Matrix>& layers);

}  // namespace eos

namespace eos {
// M x without forming M
Vec gram_apply(const MlpNet& net, const Matrix& X, const Vec& x);
}  // namespace eos
