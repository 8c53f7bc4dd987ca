#include "fairnorm/error.hpp"

namespace fairnorm {

void rethrow_with_context(const Error& e, const std::string& context)
{
    const std::string msg = context + ": " + e.what();
    switch (e.kind()) {
    case ErrorKind::usage: throw UsageError(msg);
    case ErrorKind::data: throw DataError(msg);
    case ErrorKind::numeric: throw NumericError(msg);
    }
    throw Error(e.kind(), msg);
}

}  // namespace fairnorm
