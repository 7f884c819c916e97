#pragma once

#include "cmc/dataset.hpp"
#include "cmc/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace cmc::testing {

/// Class sizes shaped like the fbis collection: 17 classes, 2463 documents,
/// four classes above the balance point (506, 387, 358, 190), 13 below.
inline std::vector<std::size_t> fbis_like_counts() {
    return {506, 387, 358, 190, 139, 125, 121, 119, 94, 92, 65, 48, 46, 46, 43, 46, 38};
}

struct TextSpec {
    std::vector<std::size_t> counts;
    std::size_t vocabulary = 2000;
    /// Topic words per class.
    std::size_t topic_words = 30;
    /// Share of a document's tokens drawn from its class topic.
    double signal = 0.05;
    std::size_t min_length = 60;
    std::size_t max_length = 180;
    std::uint64_t seed = 7;
};

/// Bag-of-words documents: Zipf background vocabulary plus a per-class set of
/// topic words. Rows are interleaved across classes.
inline Dataset synthetic_text(const TextSpec& spec) {
    Rng rng(spec.seed);
    const std::size_t v = spec.vocabulary;
    std::vector<double> cdf(v);
    double acc = 0.0;
    for (std::size_t w = 0; w < v; ++w) {
        acc += 1.0 / static_cast<double>(w + 1);
        cdf[w] = acc;
    }
    for (auto& c : cdf) {
        c /= acc;
    }
    std::vector<std::vector<std::uint32_t>> topics(spec.counts.size());
    for (auto& t : topics) {
        for (std::size_t i = 0; i < spec.topic_words; ++i) {
            t.push_back(static_cast<std::uint32_t>(rng.below(v)));
        }
    }
    std::vector<std::size_t> order;
    for (std::size_t c = 0; c < spec.counts.size(); ++c) {
        order.insert(order.end(), spec.counts[c], c);
    }
    rng.shuffle(order.begin(), order.end());

    Dataset ds;
    ds.schema = FeatureSchema::numeric(v);
    ds.x = FeatureMatrix::sparse(v);
    for (std::size_t c = 0; c < spec.counts.size(); ++c) {
        ds.labels.push_back("c" + std::to_string(c + 1));
    }
    std::map<std::uint32_t, double> bag;
    std::vector<std::uint32_t> cols;
    std::vector<double> vals;
    for (const auto c : order) {
        bag.clear();
        const auto len = spec.min_length + rng.below(spec.max_length - spec.min_length + 1);
        for (std::size_t t = 0; t < len; ++t) {
            std::uint32_t w;
            if (rng.uniform() < spec.signal) {
                w = topics[c][rng.below(topics[c].size())];
            } else {
                const double u = rng.uniform();
                w = static_cast<std::uint32_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
                w = std::min<std::uint32_t>(w, static_cast<std::uint32_t>(v - 1));
            }
            bag[w] += 1.0;
        }
        cols.clear();
        vals.clear();
        for (const auto& [w, n] : bag) {
            cols.push_back(w);
            vals.push_back(n);
        }
        ds.x.push_sparse(cols, vals);
        ds.y.push_back(c);
    }
    return ds;
}

/// Two Gaussian-ish blobs per class on a grid, dense, for small unit tests.
inline Dataset blobs(const std::vector<std::size_t>& counts, std::size_t dims, double spread, std::uint64_t seed) {
    Rng rng(seed);
    Dataset ds;
    ds.schema = FeatureSchema::numeric(dims);
    ds.x = FeatureMatrix::dense(dims);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        ds.labels.push_back("k" + std::to_string(c));
    }
    std::vector<double> row(dims);
    for (std::size_t c = 0; c < counts.size(); ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            for (std::size_t d = 0; d < dims; ++d) {
                const double centre = d == c % dims ? 3.0 * static_cast<double>(1 + c / dims) : 0.0;
                // Sum of uniforms: cheap, portable, roughly bell shaped.
                const double noise = (rng.uniform() + rng.uniform() + rng.uniform() - 1.5) * spread;
                row[d] = centre + noise;
            }
            ds.x.push_dense(row);
            ds.y.push_back(c);
        }
    }
    return ds;
}

}  // namespace cmc::testing
