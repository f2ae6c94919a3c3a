//! Seeded synthetic HR tables.

use std::ops::RangeInclusive;

use anonsql_core::{ColumnType, Schema, Table, Value};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shape of a generated table.
///
/// The `CS` department holds only men except for an optional single woman,
/// the victim of the difference attack. Every CS age in `cs_ages` gets a
/// random number of users from `users_per_age`.
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub seed: u64,
    pub table: String,
    pub cs_ages: RangeInclusive<i64>,
    pub users_per_age: RangeInclusive<usize>,
    pub salary_levels: usize,
    pub other_users: usize,
    pub victim: bool,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 1,
            table: "hr".into(),
            cs_ages: 20..=69,
            users_per_age: 6..=10,
            salary_levels: 10,
            other_users: 300,
            victim: true,
        }
    }
}

impl FixtureSpec {
    pub fn with_seed(seed: u64) -> Self {
        FixtureSpec {
            seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub table: Table,
    /// Salary of the victim, or a random level when no victim exists.
    pub victim_salary: i64,
    pub victim_present: bool,
    pub salaries: Vec<i64>,
}

pub fn schema() -> Schema {
    Schema::new(
        vec![
            ("uid".into(), ColumnType::Integer),
            ("dept".into(), ColumnType::Text),
            ("gender".into(), ColumnType::Text),
            ("salary".into(), ColumnType::Integer),
            ("age".into(), ColumnType::Integer),
        ],
        "uid",
    )
    .expect("fixture schema is valid")
}

pub fn salary_level(level: usize) -> i64 {
    40_000 + 5_000 * level as i64
}

/// Generate a table: one row per user.
pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let salaries: Vec<i64> = (0..spec.salary_levels.max(1)).map(salary_level).collect();
    let mut rows = Vec::new();
    let mut uid = 0i64;
    let mut push = |rows: &mut Vec<Vec<Value>>, dept: &str, gender: &str, salary: i64, age: i64| {
        uid += 1;
        rows.push(vec![
            Value::Int(uid),
            Value::Text(dept.into()),
            Value::Text(gender.into()),
            Value::Int(salary),
            Value::Int(age),
        ]);
    };
    for age in spec.cs_ages.clone() {
        let n = rng.gen_range(spec.users_per_age.clone());
        for _ in 0..n {
            let salary = *salaries.choose(&mut rng).expect("at least one level");
            push(&mut rows, "CS", "M", salary, age);
        }
    }
    for _ in 0..spec.other_users {
        let dept = ["Math", "EE", "Bio"][rng.gen_range(0..3)];
        let gender = if rng.gen_bool(0.5) { "F" } else { "M" };
        let salary = *salaries.choose(&mut rng).expect("at least one level");
        push(&mut rows, dept, gender, salary, rng.gen_range(20..=69));
    }
    let victim_salary = *salaries.choose(&mut rng).expect("at least one level");
    if spec.victim {
        let age = rng.gen_range(spec.cs_ages.clone());
        push(&mut rows, "CS", "F", victim_salary, age);
    }
    let table = Table::new(spec.table.clone(), schema(), rows).expect("generated rows match schema");
    Fixture {
        table,
        victim_salary,
        victim_present: spec.victim,
        salaries,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&FixtureSpec::with_seed(7));
        let b = generate(&FixtureSpec::with_seed(7));
        let c = generate(&FixtureSpec::with_seed(8));
        assert_eq!(a.table, b.table);
        assert_ne!(a.table, c.table);
    }

    #[test]
    fn single_woman_in_cs() {
        let f = generate(&FixtureSpec::default());
        let women: Vec<_> = f
            .table
            .rows()
            .iter()
            .filter(|r| r[1] == Value::Text("CS".into()) && r[2] == Value::Text("F".into()))
            .collect();
        assert_eq!(women.len(), 1);
        assert_eq!(women[0][3], Value::Int(f.victim_salary));
        let absent = generate(&FixtureSpec {
            victim: false,
            ..Default::default()
        });
        assert!(!absent
            .table
            .rows()
            .iter()
            .any(|r| r[1] == Value::Text("CS".into()) && r[2] == Value::Text("F".into())));
    }

    #[test]
    fn every_cs_age_is_populated() {
        let f = generate(&FixtureSpec::default());
        for age in 20..=69 {
            let n = f
                .table
                .rows()
                .iter()
                .filter(|r| r[1] == Value::Text("CS".into()) && r[4] == Value::Int(age))
                .count();
            assert!(n >= 6, "age {age} has {n} users");
        }
    }
}
