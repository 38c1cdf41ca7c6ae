#pragma once

#include <cstdint>

#include "onmf/errors.hpp"
#include "onmf/matrix.hpp"

namespace onmf {

// Seeded, repeatable source of length-F data vectors.
class SampleStream {
public:
    virtual ~SampleStream() = default;

    virtual std::size_t dim() const = 0;

    // Total number of samples this stream can yield, or SIZE_MAX if unbounded.
    virtual std::size_t total() const = 0;

    virtual std::size_t yielded() const = 0;

    Vector next() {
        if (yielded() >= total()) throw DataError("sample stream exhausted");
        return do_next();
    }

protected:
    virtual Vector do_next() = 0;
};

}  // namespace onmf
