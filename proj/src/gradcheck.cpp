#include "clstm/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "clstm/model.hpp"

namespace clstm {

namespace {

// Relative error with an absolute regime for near-zero pairs, where the
// quotient would only amplify finite-difference noise.
double rel_err(double a, double n) {
    double denom = std::max(std::abs(a), std::abs(n));
    if (denom < 1e-6) return std::abs(a - n);
    return std::abs(a - n) / denom;
}

struct Setup {
    ModelConfig config;
    Vocab vocab;
    ModelParams<double> params;
    std::vector<Example> examples;
    std::vector<FrozenMasks<double>> masks;  // one per example when dropout is frozen
};

Setup build_setup(const GradcheckConfig& gc, std::uint64_t seed) {
    Setup s;
    s.config.task = Task::sst5;
    s.config.embedding_dim = gc.embedding_dim;
    s.config.trainable_embeddings = !gc.frozen_embeddings;
    s.config.banks = gc.banks;
    s.config.d_mem = gc.d_mem;
    s.config.num_classes = gc.num_classes;
    s.config.l2_lambda = gc.l2_lambda;
    s.config.read_at_true_length = gc.read_at_true_length;
    s.config.dropout_p = gc.dropout_frozen_mask ? gc.dropout_p : 0.0;
    if (!gc.dropout_frozen_mask) s.config.dropout_sites.clear();
    s.config.opt.clip_enabled = false;

    s.vocab.unk_id = 0;
    s.vocab.id_to_token.push_back("<unk>");
    s.vocab.token_to_id["<unk>"] = 0;
    for (std::size_t i = 1; i < gc.vocab_size; ++i) {
        std::string tok = "w" + std::to_string(i);
        s.vocab.token_to_id[tok] = static_cast<int>(i);
        s.vocab.id_to_token.push_back(tok);
    }
    s.vocab.maxlen = gc.maxlen;

    Rng rng(seed);
    s.params = init_params<double>(s.config, s.vocab, {}, rng);

    std::size_t k_max = s.config.k_max();
    for (std::size_t e = 0; e < gc.num_examples; ++e) {
        Example ex;
        ex.ids.resize(gc.maxlen);
        for (auto& id : ex.ids) id = static_cast<int>(rng.next_below(gc.vocab_size));
        ex.label = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(gc.num_classes)));
        ex.true_length = gc.read_at_true_length
                             ? k_max + rng.next_below(gc.maxlen - k_max + 1)
                             : gc.maxlen;
        s.examples.push_back(std::move(ex));
    }

    if (gc.dropout_frozen_mask) {
        const double keep_scale = 1.0 / (1.0 - gc.dropout_p);
        for (std::size_t e = 0; e < gc.num_examples; ++e) {
            FrozenMasks<double> m;
            m.words = Matrix<double>(gc.maxlen, gc.embedding_dim);
            for (auto& v : m.words.data) v = rng.next_double() < gc.dropout_p ? 0.0 : keep_scale;
            m.lstm_out = Matrix<double>(1, gc.d_mem);
            for (auto& v : m.lstm_out.data) v = rng.next_double() < gc.dropout_p ? 0.0 : keep_scale;
            s.masks.push_back(std::move(m));
        }
        // An all-zero output mask would silently decouple the head; redraw one
        // surviving unit in that case.
        for (auto& m : s.masks) {
            bool any = false;
            for (double v : m.lstm_out.data) any |= v != 0.0;
            if (!any) m.lstm_out(0, 0) = keep_scale;
        }
    }
    return s;
}

// Finite differences step across the ReLU kink when a pre-activation sits
// too close to 0, so such draws are rejected and resampled.
bool has_kink_risk(const Setup& s) {
    for (std::size_t e = 0; e < s.examples.size(); ++e) {
        const FrozenMasks<double>* masks = s.masks.empty() ? nullptr : &s.masks[e];
        ForwardCache<double> cache = forward(s.examples[e], s.params, s.config, Mode::train, nullptr, masks);
        for (const auto& bank_cache : cache.conv.caches)
            for (double z : bank_cache.pre_act.data)
                if (std::abs(z) < 1e-3) return true;
    }
    return false;
}

double loss_of(const Setup& s) {
    double total = 0.0;
    for (std::size_t e = 0; e < s.examples.size(); ++e) {
        const FrozenMasks<double>* masks = s.masks.empty() ? nullptr : &s.masks[e];
        ForwardCache<double> cache = forward(s.examples[e], s.params, s.config, Mode::train, nullptr, masks);
        total += cross_entropy(cache.probs, s.examples[e].label);
    }
    return total / static_cast<double>(s.examples.size()) + l2_penalty(s.params.head, s.config.l2_lambda);
}

}  // namespace

GradcheckReport gradcheck(const GradcheckConfig& gc) {
    Setup setup;
    std::uint64_t seed = gc.seed;
    for (int attempt = 0; attempt < 64; ++attempt) {
        setup = build_setup(gc, seed);
        if (!has_kink_risk(setup)) break;
        seed = Rng::splitmix64(seed + 0x9E37);
        if (attempt == 63) throw NumericError("gradcheck: could not sample a kink-free configuration");
    }

    // Analytic gradient of the batch-mean loss.
    ModelGrads<double> analytic = zero_grads(setup.params);
    for (std::size_t e = 0; e < setup.examples.size(); ++e) {
        const FrozenMasks<double>* masks = setup.masks.empty() ? nullptr : &setup.masks[e];
        ForwardCache<double> cache = forward(setup.examples[e], setup.params, setup.config, Mode::train, nullptr, masks);
        analytic.add_scaled(backward(cache, setup.examples[e].label, setup.params, setup.config), 1.0);
    }
    analytic.scale(1.0 / static_cast<double>(setup.examples.size()));

    // Dense per-block view of the analytic gradient, in canonical block order.
    std::vector<std::string> names;
    std::vector<Matrix<double>*> param_blocks;
    for_each_block(setup.params, [&](const std::string& name, Matrix<double>& block) {
        names.push_back(name);
        param_blocks.push_back(&block);
    });
    std::vector<Matrix<double>> analytic_blocks;
    analytic_blocks.push_back(analytic.embedding.to_dense(setup.vocab.size(), setup.config.embedding_dim));
    analytic.for_each_dense([&](const Matrix<double>& m) { analytic_blocks.push_back(m); });

    if (!gc.corrupt_block.empty()) {
        bool found = false;
        for (std::size_t b = 0; b < names.size(); ++b) {
            if (names[b] == gc.corrupt_block) {
                scale_inplace(analytic_blocks[b], gc.corrupt_factor);
                found = true;
            }
        }
        if (!found) throw ArgumentError("gradcheck: unknown block '" + gc.corrupt_block + "'");
    }

    GradcheckReport report;
    report.pass = true;
    for (std::size_t b = 0; b < names.size(); ++b) {
        if (gc.frozen_embeddings && names[b] == "embedding") continue;
        Matrix<double>& block = *param_blocks[b];
        BlockCheck check;
        check.block = names[b];
        for (std::size_t i = 0; i < block.size(); ++i) {
            double saved = block.data[i];
            block.data[i] = saved + gc.fd_step;
            double up = loss_of(setup);
            block.data[i] = saved - gc.fd_step;
            double down = loss_of(setup);
            block.data[i] = saved;
            double numeric = (up - down) / (2.0 * gc.fd_step);
            check.max_rel_err = std::max(check.max_rel_err, rel_err(analytic_blocks[b].data[i], numeric));
        }
        check.pass = check.max_rel_err < gc.tolerance;
        report.pass &= check.pass;
        report.blocks.push_back(check);
    }
    return report;
}

std::string format_report(const GradcheckReport& report) {
    std::ostringstream out;
    out << "block                     max rel err   status\n";
    for (const auto& b : report.blocks) {
        out << b.block;
        for (std::size_t i = b.block.size(); i < 26; ++i) out << ' ';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%11.3e", b.max_rel_err);
        out << buf << "   " << (b.pass ? "ok" : "FAIL") << "\n";
    }
    out << (report.pass ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
    return out.str();
}

}  // namespace clstm
