use std::sync::Arc;

use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use diethelper_api::{router, AppState};
use diethelper_core::{FixtureAdapter, OcrAdapter};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

struct Client {
    app: axum::Router,
}

impl Client {
    fn new() -> Self {
        Self::with_ocr(None)
    }

    fn with_ocr(ocr: Option<Arc<dyn OcrAdapter>>) -> Self {
        let state = AppState::in_memory(true, ocr).unwrap();
        Self {
            app: router(Arc::new(state)),
        }
    }

    async fn raw(
        &self,
        method: Method,
        path: &str,
        token: Option<&str>,
        body: Body,
        ctype: &str,
    ) -> (StatusCode, Vec<u8>) {
        let mut req = Request::builder()
            .method(method)
            .uri(path)
            .header("content-type", ctype);
        if let Some(t) = token {
            req = req.header("authorization", format!("Bearer {t}"));
        }
        let resp = self.app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
        (status, bytes)
    }

    async fn call(&self, method: Method, path: &str, token: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
        let body = body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty);
        let (status, bytes) = self.raw(method, path, token, body, "application/json").await;
        let value = if bytes.is_empty() {
            Value::Null
        } else {
            serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()))
        };
        (status, value)
    }

    /// Registers and logs in; returns the bearer token.
    async fn member(&self, email: &str) -> String {
        let (s, _) = self
            .call(
                Method::POST,
                "/v1/register",
                None,
                Some(json!({"name": "Shopper", "email": email, "password": "correct horse"})),
            )
            .await;
        assert_eq!(s, StatusCode::CREATED);
        let (s, session) = self
            .call(
                Method::POST,
                "/v1/login",
                None,
                Some(json!({"email": email, "password": "correct horse"})),
            )
            .await;
        assert_eq!(s, StatusCode::OK);
        session["token"].as_str().unwrap().to_string()
    }
}

#[tokio::test]
async fn gluten_free_user_gets_one_violation() {
    let c = Client::new();
    let t = c.member("a@example.com").await;
    let (s, _) = c.call(Method::PUT, "/v1/me/diets/gluten-free", Some(&t), None).await;
    assert_eq!(s, StatusCode::OK);

    let (s, body) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"text": "wheat flour, salt"})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body["verdict"], "violations_found");
    assert_eq!(body["violations"].as_array().unwrap().len(), 1);
    assert_eq!(body["violations"][0]["token_index"], 0);
    assert_eq!(body["violated_diets"], json!(["gluten-free"]));
    assert_eq!(body["tokens"].as_array().unwrap().len(), 2);
}

#[tokio::test]
async fn check_requires_session() {
    let c = Client::new();
    let (s, body) = c
        .call(Method::POST, "/v1/check", None, Some(json!({"text": "wheat"})))
        .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    assert_eq!(body["code"], "unauthenticated");
    let (s, _) = c
        .call(Method::POST, "/v1/check", Some("bogus"), Some(json!({"text": "wheat"})))
        .await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn retake_codes() {
    let c = Client::new();
    let t = c.member("r@example.com").await;
    let (s, body) = c
        .call(Method::POST, "/v1/check", Some(&t), Some(json!({"fragments": []})))
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "no_text_found");
    assert_eq!(body["retake"], true);

    let (_, body) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"fragments": ["  ", ""]})),
        )
        .await;
    assert_eq!(body["code"], "no_text_found");

    let (s, body) = c
        .call(Method::POST, "/v1/check", Some(&t), Some(json!({"text": " , ,"})))
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(body["code"], "empty_transcript");
    assert_eq!(body["retake"], true);

    let (_, body) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"fragments": [",", " ,"]})),
        )
        .await;
    assert_eq!(body["code"], "empty_transcript");
}

#[tokio::test]
async fn check_body_needs_exactly_one_source() {
    let c = Client::new();
    let t = c.member("b@example.com").await;
    for body in [json!({}), json!({"text": "a", "fragments": ["b"]}), json!({"txt": "a"})] {
        let (s, v) = c.call(Method::POST, "/v1/check", Some(&t), Some(body)).await;
        assert_eq!(s.as_u16() / 100, 4, "{v}");
        assert!(v["code"].is_string());
    }
    let (s, v) = c
        .call(Method::POST, "/v1/check", Some(&t), Some(json!({"image_base64": "!!"})))
        .await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["code"], "bad_request");
}

#[tokio::test]
async fn fragments_are_joined_with_commas() {
    let c = Client::new();
    let t = c.member("f@example.com").await;
    c.call(Method::PUT, "/v1/me/diets/gluten-free", Some(&t), None).await;
    let (_, body) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"fragments": ["Ingredients: Wheat", "Flour, Salt"]})),
        )
        .await;
    let tokens: Vec<&str> = body["tokens"]
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["text"].as_str().unwrap())
        .collect();
    assert_eq!(tokens, ["ingredients: wheat", "flour", "salt"]);
    assert_eq!(body["violations"][0]["token_index"], 0);
    assert_eq!(body["violations"][0]["matches"][0]["needle"], "wheat");
}

#[tokio::test]
async fn image_checks_use_the_ocr_adapter() {
    let dir = tempfile::tempdir().unwrap();
    let adapter = FixtureAdapter::new(dir.path());
    let image = b"\x89PNG fake label".to_vec();
    adapter
        .register(&image, &["Sugar, Cocoa butter", "whole milk powder"])
        .unwrap();
    adapter.register(b"blank photo", &[]).unwrap();
    let c = Client::with_ocr(Some(Arc::new(adapter)));
    let t = c.member("i@example.com").await;
    c.call(Method::PUT, "/v1/me/diets/milk-free", Some(&t), None).await;

    let (s, bytes) = c
        .raw(
            Method::POST,
            "/v1/check/image",
            Some(&t),
            Body::from(image.clone()),
            "image/png",
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    let body: Value = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(body["violated_diets"], json!(["milk-free"]));

    use base64::Engine;
    let encoded = base64::engine::general_purpose::STANDARD.encode(&image);
    let (s, body2) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"image_base64": encoded})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(body, body2);

    let (s, body) = c
        .raw(
            Method::POST,
            "/v1/check/image",
            Some(&t),
            Body::from("blank photo"),
            "image/png",
        )
        .await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert!(String::from_utf8_lossy(&body).contains("no_text_found"));
}

#[tokio::test]
async fn image_without_adapter_is_503() {
    let c = Client::new();
    let t = c.member("n@example.com").await;
    let (s, bytes) = c
        .raw(Method::POST, "/v1/check/image", Some(&t), Body::from("x"), "image/png")
        .await;
    assert_eq!(s, StatusCode::SERVICE_UNAVAILABLE);
    assert!(String::from_utf8_lossy(&bytes).contains("ocr_unavailable"));
}

#[tokio::test]
async fn profile_flow() {
    let c = Client::new();
    let t = c.member("p@example.com").await;

    let (s, me) = c.call(Method::GET, "/v1/me", Some(&t), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(me["chosen_diets"], json!([]));

    let (s, me) = c
        .call(Method::PATCH, "/v1/me", Some(&t), Some(json!({"name": "New Name"})))
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(me["name"], "New Name");

    let (s, _) = c.call(Method::PUT, "/v1/me/diets/vegan", Some(&t), None).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v) = c.call(Method::PUT, "/v1/me/diets/vegan", Some(&t), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::CONFLICT, Some("already_chosen")));
    let (s, v) = c.call(Method::PUT, "/v1/me/diets/keto", Some(&t), None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("diet_not_found")));

    let (s, me) = c
        .call(
            Method::POST,
            "/v1/me/ingredients",
            Some(&t),
            Some(json!({"ingredient": "  Palm Oil "})),
        )
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(me["custom_unwanted_ingredients"], json!(["palm oil"]));

    let (_, result) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"text": "Palm oil, honey"})),
        )
        .await;
    assert_eq!(result["violated_diets"], json!(["Custom", "vegan"]));

    let (s, me) = c
        .call(Method::DELETE, "/v1/me/ingredients/palm%20oil", Some(&t), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(me["custom_unwanted_ingredients"], json!([]));
    let (s, me) = c.call(Method::DELETE, "/v1/me/diets/vegan", Some(&t), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(me["chosen_diets"], json!([]));

    let (_, result) = c
        .call(
            Method::POST,
            "/v1/check",
            Some(&t),
            Some(json!({"text": "Palm oil, honey"})),
        )
        .await;
    assert_eq!(result["verdict"], "compliant");

    let (s, _) = c.call(Method::POST, "/v1/logout", Some(&t), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = c.call(Method::GET, "/v1/me", Some(&t), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn diet_browsing_is_public() {
    let c = Client::new();
    let (s, diets) = c.call(Method::GET, "/v1/diets", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(diets.as_array().unwrap().len(), 7);
    let (s, diet) = c.call(Method::GET, "/v1/diets/nut-free", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert!(diet["forbidden_ingredients"]
        .as_array()
        .unwrap()
        .iter()
        .any(|i| i == "almond"));
    let (s, _) = c.call(Method::GET, "/v1/diets/nope", None, None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = c.call(Method::GET, "/v1/me", None, None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
    let (s, v) = c.call(Method::GET, "/v1/nowhere", None, None).await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::NOT_FOUND, Some("not_found")));
}

#[tokio::test]
async fn registration_errors() {
    let c = Client::new();
    c.member("dup@example.com").await;
    let cases = [
        (
            json!({"name": "x", "email": "dup@example.com", "password": "longenough"}),
            "email_taken",
        ),
        (
            json!({"name": "x", "email": "no-at-sign", "password": "longenough"}),
            "invalid_email",
        ),
        (
            json!({"name": "x", "email": "w@example.com", "password": "short"}),
            "weak_password",
        ),
        (
            json!({"name": " ", "email": "e@example.com", "password": "longenough"}),
            "empty_name",
        ),
    ];
    for (body, code) in cases {
        let (_, v) = c.call(Method::POST, "/v1/register", None, Some(body)).await;
        assert_eq!(v["code"], code);
    }
    let (s, v) = c
        .call(
            Method::POST,
            "/v1/login",
            None,
            Some(json!({"email": "dup@example.com", "password": "wrong pass"})),
        )
        .await;
    assert_eq!(
        (s, v["code"].as_str()),
        (StatusCode::UNAUTHORIZED, Some("invalid_credentials"))
    );
}

#[tokio::test]
async fn admin_routes() {
    let state = AppState::in_memory(true, None).unwrap();
    state
        .users
        .bootstrap_admin("Admin", "admin@example.com", "admin password")
        .unwrap();
    let c = Client {
        app: router(Arc::new(state)),
    };
    let member = c.member("m@example.com").await;
    let (_, session) = c
        .call(
            Method::POST,
            "/v1/login",
            None,
            Some(json!({"email": "admin@example.com", "password": "admin password"})),
        )
        .await;
    let admin = session["token"].as_str().unwrap().to_string();
    assert_eq!(session["role"], "admin");

    let diet = json!({"description": "No eggs", "forbidden_ingredients": ["Egg", "albumen"]});
    let (s, v) = c
        .call(
            Method::PUT,
            "/v1/admin/diets/egg-free",
            Some(&member),
            Some(diet.clone()),
        )
        .await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::FORBIDDEN, Some("forbidden")));
    let (s, v) = c
        .call(Method::PUT, "/v1/admin/diets/egg-free", Some(&admin), Some(diet))
        .await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["forbidden_ingredients"], json!(["egg", "albumen"]));
    let (s, v) = c
        .call(
            Method::PUT,
            "/v1/admin/diets/Custom",
            Some(&admin),
            Some(json!({"forbidden_ingredients": ["x"]})),
        )
        .await;
    assert_eq!((s, v["code"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid_diet")));

    // The member picks up the new diet and the cached matcher follows edits.
    c.call(Method::PUT, "/v1/me/diets/egg-free", Some(&member), None).await;
    let check = json!({"text": "dried egg yolk, mayonnaise"});
    let (_, r) = c
        .call(Method::POST, "/v1/check", Some(&member), Some(check.clone()))
        .await;
    assert_eq!(r["violations"].as_array().unwrap().len(), 1);
    c.call(
        Method::PUT,
        "/v1/admin/diets/egg-free",
        Some(&admin),
        Some(json!({"forbidden_ingredients": ["egg", "mayonnaise"]})),
    )
    .await;
    let (_, r) = c
        .call(Method::POST, "/v1/check", Some(&member), Some(check.clone()))
        .await;
    assert_eq!(r["violations"].as_array().unwrap().len(), 2);

    let (s, _) = c
        .call(Method::DELETE, "/v1/admin/diets/egg-free", Some(&admin), None)
        .await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (_, r) = c.call(Method::POST, "/v1/check", Some(&member), Some(check)).await;
    assert_eq!(r["verdict"], "compliant");

    let (s, _) = c.call(Method::GET, "/v1/admin/users", Some(&member), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, users) = c.call(Method::GET, "/v1/admin/users", Some(&admin), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(users.as_array().unwrap().len(), 2);
    let uid = users
        .as_array()
        .unwrap()
        .iter()
        .find(|u| u["email"] == "m@example.com")
        .unwrap()["uid"]
        .as_str()
        .unwrap()
        .to_string();

    let (s, _) = c
        .call(Method::GET, &format!("/v1/users/{uid}"), Some(&admin), None)
        .await;
    assert_eq!(s, StatusCode::OK);
    let (s, _) = c
        .call(Method::DELETE, &format!("/v1/admin/users/{uid}"), Some(&admin), None)
        .await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = c.call(Method::GET, "/v1/me", Some(&member), None).await;
    assert_eq!(s, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn members_cannot_read_other_profiles() {
    let c = Client::new();
    let a = c.member("one@example.com").await;
    let b = c.member("two@example.com").await;
    let (_, me_b) = c.call(Method::GET, "/v1/me", Some(&b), None).await;
    let uid = me_b["uid"].as_str().unwrap();
    let (s, _) = c.call(Method::GET, &format!("/v1/users/{uid}"), Some(&a), None).await;
    assert_eq!(s, StatusCode::FORBIDDEN);
    let (s, _) = c.call(Method::GET, &format!("/v1/users/{uid}"), Some(&b), None).await;
    assert_eq!(s, StatusCode::OK);
}

#[tokio::test]
async fn responses_are_deterministic() {
    let c = Client::new();
    let t = c.member("d@example.com").await;
    for d in ["vegan", "nut-free", "sugar-free"] {
        c.call(Method::PUT, &format!("/v1/me/diets/{d}"), Some(&t), None).await;
    }
    let body = Body::from(r#"{"text":"Sugar, peanut butter, milk chocolate, hazelnut, salt"}"#);
    let (_, first) = c
        .raw(Method::POST, "/v1/check", Some(&t), body, "application/json")
        .await;
    for _ in 0..5 {
        let body = Body::from(r#"{"text":"Sugar, peanut butter, milk chocolate, hazelnut, salt"}"#);
        let (_, again) = c
            .raw(Method::POST, "/v1/check", Some(&t), body, "application/json")
            .await;
        assert_eq!(first, again);
    }
}

#[tokio::test]
async fn healthz_reports_catalog() {
    let c = Client::new();
    let (s, v) = c.call(Method::GET, "/healthz", None, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["diets"], 7);
}
