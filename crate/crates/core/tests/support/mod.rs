pub mod corpus;
pub mod oracle;
pub mod synthetic;
