#include <cmath>
#include <map>
#include <set>

#include "msaf/data.hpp"
#include "msaf/rng.hpp"

namespace msaf {

SplitCatalog make_splits(const std::vector<SplitItem>& catalog, uint64_t seed) {
    check(!catalog.empty(), "make_splits: empty catalog");

    std::map<int64_t, std::vector<std::string>> by_cat;
    std::set<std::string> seen;
    for (const SplitItem& item : catalog) {
        check(item.category_id >= 1, "make_splits: category_id must be positive for \"" +
                                         item.video_id + "\"");
        check(seen.insert(item.video_id).second,
              "make_splits: duplicate video_id \"" + item.video_id + "\"");
        by_cat[item.category_id].push_back(item.video_id);
    }

    Rng rng(seed);
    SplitCatalog out;
    for (auto& [cat, ids] : by_cat) {
        (void)cat;
        if (ids.size() == 1) {  // single-video categories are test-only
            out.test.push_back(ids[0]);
            continue;
        }
        rng.shuffle(ids.begin(), ids.end());
        int64_t n = (int64_t)ids.size();
        int64_t n_test = std::max<int64_t>(1, std::llround((double)n / 5.0));
        int64_t n_val = std::llround((double)n / 5.0);
        for (int64_t i = 0; i < n; ++i) {
            if (i < n_test)
                out.test.push_back(ids[(size_t)i]);
            else if (i < n_test + n_val)
                out.val.push_back(ids[(size_t)i]);
            else
                out.train.push_back(ids[(size_t)i]);
        }
    }
    return out;
}

}  // namespace msaf
