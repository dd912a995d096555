// Gate binary: runs the full verification battery at the locked fixtures and
// prints one pass/fail line per criterion.  Exit 0 iff no hard row fails
// (soft rows may warn).

#include <cstdio>
#include <exception>

#include "mmcf/verify.hpp"

int main() {
    std::vector<mmcf::CheckResult> rows;
    try {
        rows = mmcf::verification_suite("all");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fatal: %s\n", e.what());
        return 1;
    }

    bool ok = true;
    int idx = 0;
    for (const auto& c : rows) {
        ++idx;
        if (c.status == "fail") ok = false;
        std::printf("[%2d/%zu] %-26s %-4s  measured %-11.4g bound %-9.4g %s\n", idx,
                    rows.size(), c.name.c_str(), c.status.c_str(), c.measured,
                    c.bound, c.note.c_str());
    }
    std::printf("%s (%zu checks)\n", ok ? "acceptance: PASS" : "acceptance: FAIL",
                rows.size());
    return ok ? 0 : 1;
}
