#include "chunkfb/seq2seq/model.hpp"

namespace chunkfb::seq2seq {

template class Seq2Seq<float>;
template class Seq2Seq<double>;

}  // namespace chunkfb::seq2seq
