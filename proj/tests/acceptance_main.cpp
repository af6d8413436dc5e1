// Acceptance battery: one pass/fail line per criterion with measured values.
// Exit code is the number of failed criteria.

#include <iostream>

#include "graphnls/verify.hpp"

int main() {
    auto report = graphnls::verify_suite("all");
    graphnls::print_report(report, std::cout);
    std::cout << (report.all_pass() ? "all criteria passed" : "FAILURES PRESENT") << "\n";
    return report.failures();
}
