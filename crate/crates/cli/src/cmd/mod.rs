pub mod alpha;
pub mod cusp;
pub mod lemma2;
pub mod smallvalue;
pub mod transform;
pub mod wave;
pub mod weyl;
pub mod whittaker;
