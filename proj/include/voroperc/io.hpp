#pragma once

#include <string>
#include <vector>

#include "voroperc/estimators.hpp"

namespace voroperc {

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One row of the result CSV. Columns are fixed and versioned (see README);
// wall-clock time goes to the sidecar log so result files stay byte-stable.
struct ResultRow {
    std::string estimator;
    std::string params_json;  // canonical key order
    double value = 0.0;
    double stderr_ = 0.0;
    long n_effective = 0;
    long n_discarded = 0;
    uint64_t seed = 0;

    static ResultRow from(const std::string& estimator, const std::string& params,
                          const MCEstimate& e);
};

constexpr const char* kCsvHeader =
    "schema=voroperc.result.v1,estimator,params,value,stderr,n_effective,n_discarded,seed";

std::string format_csv(const std::vector<ResultRow>& rows);

// Writes content at path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

// Double formatting used in all result files: shortest round-trip form.
std::string fmt_double(double x);

}  // namespace voroperc
